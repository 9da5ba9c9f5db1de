"""A deterministic offline provider driven by scripted replies."""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence, Union

import numpy as np

from .base import Provider
from .summary import extractive_summary
from .types import ChatRequest, NoRouteError, ProviderConfig, ProviderError, SummaryConfig, ToolCall

_WORD_RE = re.compile(r"[a-z0-9]+")

Reply = Union[str, Exception, Callable[[ChatRequest], str]]


class ScriptMissError(ProviderError):
    """No scripted reply matches the prompt."""


@dataclass
class Rule:
    pattern: re.Pattern[str]
    reply: Reply

    @classmethod
    def of(cls, pattern: str | re.Pattern[str], reply: Reply) -> "Rule":
        return cls(re.compile(pattern) if isinstance(pattern, str) else pattern, reply)


@dataclass
class ToolRule:
    pattern: re.Pattern[str]
    tool: str
    arguments: dict[str, Any] = field(default_factory=dict)


def _features(text: str) -> list[str]:
    words = _WORD_RE.findall(text.lower())
    feats = list(words) + [f"{a} {b}" for a, b in zip(words, words[1:])]
    return feats or ["\x00empty"]


def hash_embedding(text: str, dim: int = 64, seed: int = 0) -> np.ndarray:
    """Signed feature hashing of word unigrams and bigrams, L2-normalised.

    Uses BLAKE2b so the vector is identical on every platform and run.
    """
    vec = np.zeros(dim, dtype=np.float64)
    salt = seed.to_bytes(8, "little", signed=True)[:16]
    for feat in _features(text):
        h = int.from_bytes(hashlib.blake2b(feat.encode("utf-8"), digest_size=8, salt=salt).digest(), "little")
        vec[h % dim] += 1.0 if (h >> 63) & 1 else -1.0
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # every feature cancelled out; fall back to the first bucket of the text hash
        h = int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8, salt=salt).digest(), "little")
        vec[h % dim] = 1.0
        norm = 1.0
    return (vec / norm).astype(np.float32)


class MockProvider(Provider):
    """Scripted chat and tool replies plus hashing embeddings.

    Chat replies come from ``sequence`` in order when given, otherwise from
    the first ``rules`` entry whose regex is found in the request prompt. A
    reply can be a string, an exception to raise, or a callable. Tool calls
    come from ``tool_rules`` the same way. Every request is recorded in
    ``requests``.
    """

    def __init__(
        self,
        rules: Iterable[tuple[str | re.Pattern[str], Reply]] | dict[str, Reply] = (),
        sequence: Sequence[Reply] | None = None,
        tool_rules: Iterable[tuple[str, str] | tuple[str, str, dict[str, Any]]] = (),
        seed: int = 0,
        dim: int = 64,
        config: ProviderConfig | None = None,
    ) -> None:
        self.config = config or ProviderConfig()
        items = rules.items() if isinstance(rules, dict) else rules
        self.rules = [Rule.of(p, r) for p, r in items]
        self.sequence = list(sequence) if sequence is not None else None
        self.tool_rules = [
            ToolRule(re.compile(t[0]), t[1], dict(t[2]) if len(t) > 2 else {})  # type: ignore[misc]
            for t in tool_rules
        ]
        self.seed = seed
        self.dim = dim
        self.requests: list[ChatRequest] = []
        self.embedded: list[str] = []
        self._lock = threading.Lock()

    def add_rule(self, pattern: str, reply: Reply) -> None:
        self.rules.append(Rule.of(pattern, reply))

    def _resolve(self, req: ChatRequest) -> Reply:
        with self._lock:
            self.requests.append(req)
            if self.sequence is not None:
                if not self.sequence:
                    raise ScriptMissError("scripted sequence exhausted")
                return self.sequence.pop(0)
        prompt = req.prompt
        for rule in self.rules:
            if rule.pattern.search(prompt):
                return rule.reply
        raise ScriptMissError(f"no scripted reply for prompt: {prompt[:120]!r}")

    def chat(self, req: ChatRequest) -> str:
        reply = self._resolve(req)
        if isinstance(reply, Exception):
            raise reply
        if callable(reply):
            return reply(req)
        return reply

    def call_tool(self, req: ChatRequest) -> ToolCall:
        if not req.tools:
            raise ValueError("call_tool needs at least one tool")
        with self._lock:
            self.requests.append(req)
        offered = {t.name for t in req.tools}
        prompt = req.prompt
        for rule in self.tool_rules:
            # rules for tools that were not offered are skipped, so one script can serve several callers
            if rule.tool in offered and rule.pattern.search(prompt):
                return ToolCall(rule.tool, dict(rule.arguments))
        raise NoRouteError(f"no tool selected for prompt: {prompt[:120]!r}")

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        texts = list(texts)
        if not texts or any(not isinstance(t, str) or not t for t in texts):
            raise ValueError("embed needs a non-empty list of non-empty strings")
        with self._lock:
            self.embedded.extend(texts)
        return [hash_embedding(t, self.dim, self.seed) for t in texts]

    def summarize(self, text: str, cfg: SummaryConfig | None = None) -> str:
        cfg = cfg or SummaryConfig()
        return extractive_summary(text, cfg.max_length)


def load_mock_script(path: str | os.PathLike[str], seed: int | None = None, dim: int | None = None,
                     config: ProviderConfig | None = None) -> MockProvider:
    """Build a MockProvider from a JSON script file.

    Shape: ``{"rules": [[regex, reply], ...], "sequence": [reply, ...],
    "tool_rules": [[regex, tool_name, {args}], ...], "seed": 0, "dim": 64}``.
    Every key is optional.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return MockProvider(
        rules=[tuple(r) for r in data.get("rules", [])],
        sequence=data.get("sequence"),
        tool_rules=[tuple(t) for t in data.get("tool_rules", [])],
        seed=int(data.get("seed", 0) if seed is None else seed),
        dim=int(data.get("dim", 64) if dim is None else dim),
        config=config,
    )
