"""Text normalisation and chunking."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any

STOPWORDS_RESOURCE = "stopwords_en.txt"
STOPWORDS_VERSION = 1

_APOSTROPHES_RE = re.compile(r"['‘’ʼ]")
_DISALLOWED_RE = re.compile(r"[^a-z0-9.\n ]")
_SPACES_RE = re.compile(r" +")
_LINE_EDGE_RE = re.compile(r" *\n *")


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    """The bundled English stop-word list (lowercase, no apostrophes)."""
    text = resources.files("hybridrag.data").joinpath(STOPWORDS_RESOURCE).read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


@lru_cache(maxsize=1)
def _stopword_re() -> re.Pattern[str]:
    alternation = "|".join(sorted(stopwords(), key=len, reverse=True))
    return re.compile(rf"(?<![a-z0-9])(?:{alternation})(?![a-z0-9])")


def preprocess(text: str) -> str:
    """Lowercase, drop stop words and every character except ``[a-z0-9.]``,
    spaces and newlines.

    Periods survive so decimal outline numbers such as ``1.1`` keep their
    structure. Apostrophes are deleted (``school's`` -> ``schools``); any
    other removed character becomes a space. Space runs collapse to one and
    lines are trimmed. The function is idempotent.
    """
    text = _APOSTROPHES_RE.sub("", text.lower())
    text = _DISALLOWED_RE.sub(" ", text)
    text = _stopword_re().sub(" ", text)
    text = _SPACES_RE.sub(" ", text)
    text = _LINE_EDGE_RE.sub("\n", text)
    return text.strip(" ")


def tokens(text: str) -> list[str]:
    """Whitespace tokens; this is the token unit for every chunk size."""
    return text.split()


@dataclass(frozen=True)
class ChunkingConfig:
    strategy: str = "fixed"
    chunk_tokens: int = 200
    overlap_tokens: int = 20

    def __post_init__(self) -> None:
        if self.strategy not in ("fixed", "overlap", "sentence"):
            raise ValueError(f"unknown chunking strategy {self.strategy!r}")
        if self.chunk_tokens < 1:
            raise ValueError("chunk_tokens must be positive")
        if not 0 <= self.overlap_tokens < self.chunk_tokens:
            raise ValueError("overlap_tokens must satisfy 0 <= overlap < chunk_tokens")


@dataclass
class Chunk:
    chunk_id: str
    parent_id: str
    seq_index: int
    text: str
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def token_count(self) -> int:
        return len(tokens(self.text))


def _sentences(text: str) -> list[list[str]]:
    # a sentence ends at a token ending in "." or at a line break; "1.1" is not an end
    out: list[list[str]] = []
    for line in text.split("\n"):
        current: list[str] = []
        for tok in line.split():
            current.append(tok)
            if tok.endswith("."):
                out.append(current)
                current = []
        if current:
            out.append(current)
    return out


def chunk_windows(text: str, config: ChunkingConfig) -> list[list[str]]:
    """Token windows for ``text`` under ``config`` (see ``chunk``)."""
    toks = tokens(text)
    size = config.chunk_tokens
    if not toks:
        return []
    if config.strategy == "fixed":
        return [toks[i : i + size] for i in range(0, len(toks), size)]
    if config.strategy == "overlap":
        stride = size - config.overlap_tokens
        return [toks[i : i + size] for i in range(0, len(toks), stride)]
    windows: list[list[str]] = []
    current: list[str] = []
    for sentence in _sentences(text):
        if len(sentence) > size:
            # an over-long sentence cannot be packed whole; fall back to fixed windows
            if current:
                windows.append(current)
                current = []
            windows.extend(sentence[i : i + size] for i in range(0, len(sentence), size))
            continue
        if len(current) + len(sentence) > size:
            windows.append(current)
            current = []
        current = current + sentence
    if current:
        windows.append(current)
    return windows


def chunk(text: str, config: ChunkingConfig | None = None, parent_id: str = "",
          metadata: dict[str, Any] | None = None) -> list[Chunk]:
    """Split preprocessed ``text`` into ordered chunks.

    * ``fixed``: consecutive windows of ``chunk_tokens`` tokens.
    * ``overlap``: windows of ``chunk_tokens`` starting every
      ``chunk_tokens - overlap_tokens`` tokens.
    * ``sentence``: whole sentences packed greedily up to ``chunk_tokens``.

    Chunk ids are ``{parent_id}:chunk:{i}``.
    """
    config = config or ChunkingConfig()
    return [
        Chunk(f"{parent_id}:chunk:{i}", parent_id, i, " ".join(window), dict(metadata or {}))
        for i, window in enumerate(chunk_windows(text, config))
    ]


def deoverlap(chunks: list[Chunk], config: ChunkingConfig) -> list[str]:
    """Rebuild the token stream from chunks, dropping the repeated prefix of overlap windows."""
    out: list[str] = []
    skip = config.overlap_tokens if config.strategy == "overlap" else 0
    for c in sorted(chunks, key=lambda c: c.seq_index):
        toks = tokens(c.text)
        out.extend(toks if c.seq_index == 0 else toks[skip:])
    return out
