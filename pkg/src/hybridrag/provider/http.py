"""Client for OpenAI-compatible chat-completion and embedding endpoints."""
from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from typing import Any, Callable, Sequence

import httpx
import numpy as np

from .base import SUMMARY_SYSTEM_PROMPT, Provider
from .types import (
    ChatMessage,
    ChatRequest,
    MalformedResponseError,
    NoRouteError,
    ProviderConfig,
    ProviderConfigError,
    ProviderHTTPError,
    RetryExhaustedError,
    SummaryConfig,
    Task,
    ToolCall,
)

logger = logging.getLogger(__name__)


def _transient(status: int) -> bool:
    return status == 429 or status >= 500


class HttpProvider(Provider):
    """Talks to ``{base_url}/v1/chat/completions`` and ``{base_url}/v1/embeddings``.

    Transient failures (timeouts, connection errors, 429, 5xx) are retried
    ``max_retries`` times with exponential backoff and +/- jitter; other
    4xx responses fail immediately. ``transport``, ``sleep`` and ``rng`` are
    injectable for tests.
    """

    def __init__(self, config: ProviderConfig | None = None, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep, rng: random.Random | None = None) -> None:
        self.config = config or ProviderConfig()
        self._client = httpx.Client(
            base_url=self.config.base_url.rstrip("/"), timeout=self.config.timeout_seconds, transport=transport
        )
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._lock = threading.Lock()
        self.dimension: int | None = None

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env_var)
        if not key:
            raise ProviderConfigError(f"environment variable {self.config.api_key_env_var} is not set")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def backoff_delay(self, attempt: int) -> float:
        cfg = self.config
        with self._lock:
            jitter = self._rng.uniform(-cfg.jitter, cfg.jitter)
        return cfg.backoff_base * cfg.backoff_factor**attempt * (1.0 + jitter)

    def _post(self, path: str, body: dict[str, Any]) -> dict[str, Any]:
        headers = self._headers()
        last_status: int | None = None
        last_error = ""
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.backoff_delay(attempt - 1)
                logger.info("retrying %s in %.2fs (attempt %d)", path, delay, attempt + 1)
                self._sleep(delay)
            try:
                resp = self._client.post(path, json=body, headers=headers)
            except httpx.TimeoutException as exc:
                last_status, last_error = None, f"timeout: {exc}"
                continue
            except httpx.TransportError as exc:
                last_status, last_error = None, f"transport error: {exc}"
                continue
            if resp.status_code < 400:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise MalformedResponseError(f"{path}: response is not JSON: {exc}") from None
            last_status, last_error = resp.status_code, resp.text[:200]
            if not _transient(resp.status_code):
                raise ProviderHTTPError(f"{path}: HTTP {resp.status_code}: {last_error}", resp.status_code)
        raise RetryExhaustedError(
            f"{path}: gave up after {self.config.max_retries + 1} attempts (last status {last_status}): {last_error}",
            last_status,
        )

    @staticmethod
    def _message(data: dict[str, Any]) -> dict[str, Any]:
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponseError("chat response has no choices[0].message") from None
        if not isinstance(message, dict):
            raise MalformedResponseError("choices[0].message is not an object")
        return message

    def chat(self, req: ChatRequest) -> str:
        content = self._message(self._post("/v1/chat/completions", req.to_wire())).get("content")
        if not isinstance(content, str):
            raise MalformedResponseError("assistant message has no text content")
        return content

    def call_tool(self, req: ChatRequest) -> ToolCall:
        if not req.tools:
            raise ValueError("call_tool needs at least one tool")
        message = self._message(self._post("/v1/chat/completions", req.to_wire()))
        calls = message.get("tool_calls") or []
        if not calls:
            raise NoRouteError("model returned no tool call")
        try:
            fn = calls[0]["function"]
            name = fn["name"]
            raw_args = fn.get("arguments") or "{}"
            args = json.loads(raw_args) if isinstance(raw_args, str) else dict(raw_args)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"malformed tool call: {exc}") from None
        if name not in {t.name for t in req.tools}:
            raise NoRouteError(f"model selected unknown tool {name!r}")
        return ToolCall(name, args if isinstance(args, dict) else {"value": args})

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        texts = list(texts)
        if not texts or any(not isinstance(t, str) or not t for t in texts):
            raise ValueError("embed needs a non-empty list of non-empty strings")
        data = self._post("/v1/embeddings", {"model": self.config.model_for(Task.EMBED), "input": texts})
        try:
            items = sorted(data["data"], key=lambda d: d["index"])
            vectors = [np.asarray(d["embedding"], dtype=np.float32) for d in items]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"malformed embeddings response: {exc}") from None
        if len(vectors) != len(texts):
            raise MalformedResponseError(f"asked for {len(texts)} embeddings, got {len(vectors)}")
        with self._lock:
            if self.dimension is None and vectors:
                self.dimension = int(vectors[0].shape[0])
            dim = self.dimension
        if any(v.ndim != 1 or v.shape[0] != dim for v in vectors):
            raise MalformedResponseError(f"embedding dimension differs from pinned {dim}")
        return vectors

    def summarize(self, text: str, cfg: SummaryConfig | None = None) -> str:
        cfg = cfg or SummaryConfig()
        if not text or not text.strip():
            raise ValueError("cannot summarise empty text")
        req = self.request(Task.SUMMARIZE, [
            ChatMessage("system", SUMMARY_SYSTEM_PROMPT.format(max_length=cfg.max_length)),
            ChatMessage("user", text),
        ])
        # the budget is a hard limit even if the model overruns it
        return " ".join(self.chat(req).split()[: cfg.max_length])
