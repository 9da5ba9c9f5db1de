"""Offline extractive summarisation."""
from __future__ import annotations

import re
from collections import Counter

from ..ingest.text import stopwords

_SENTENCE_END_RE = re.compile(r"(?<=[.!?])\s+|\n+")
_WORD_RE = re.compile(r"[a-z0-9]+")


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_END_RE.split(text) if s.strip()]


def _content_words(sentence: str) -> list[str]:
    stop = stopwords()
    return [w for w in _WORD_RE.findall(sentence.lower()) if w not in stop]


def extractive_summary(text: str, max_length: int = 256) -> str:
    """Pick the highest-scoring sentences that fit in ``max_length`` tokens.

    A sentence scores the sum of its content words' frequencies, each divided
    by the most frequent word's count. Chosen sentences come back in their
    original order. If even the best sentence is too long it is cut to the
    budget, so the result is never longer than ``max_length`` tokens.
    """
    if not text or not text.strip():
        raise ValueError("cannot summarise empty text")
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    if len(text.split()) <= max_length:
        return text
    sentences = split_sentences(text)
    freq = Counter(w for s in sentences for w in _content_words(s))
    top = max(freq.values(), default=1)
    scores = [sum(freq[w] / top for w in _content_words(s)) for s in sentences]
    ranked = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))

    chosen: list[int] = []
    used = 0
    for i in ranked:
        n = len(sentences[i].split())
        if used + n <= max_length:
            chosen.append(i)
            used += n
    if not chosen:
        return " ".join(sentences[ranked[0]].split()[:max_length])
    return " ".join(sentences[i] for i in sorted(chosen))
