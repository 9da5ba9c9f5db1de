"""The five RAGAs-style metrics as pure functions of judge counts and embeddings."""
from __future__ import annotations

import re
from typing import Sequence

import numpy as np

DEFAULT_CORRECTNESS_WEIGHT = 0.75

_SENTENCE_RE = re.compile(r"[.?!\n]+")


def split_sentences(text: str) -> list[str]:
    """Split on ``.``, ``?``, ``!`` and newlines; empty pieces dropped."""
    return [s.strip() for s in _SENTENCE_RE.split(text) if s.strip()]


def _ratio(part: int, whole: int, names: tuple[str, str]) -> float:
    if part < 0 or whole < 0:
        raise ValueError(f"{names[0]} and {names[1]} must be non-negative")
    if part > whole:
        raise ValueError(f"{names[0]} ({part}) exceeds {names[1]} ({whole})")
    return part / whole if whole else 0.0


def faithfulness(supported: int, total: int) -> float:
    return _ratio(supported, total, ("supported", "total"))


def context_relevance(relevant: int, total: int) -> float:
    return _ratio(relevant, total, ("relevant", "total"))


def context_recall(attributed: int, total_gt: int) -> float:
    return _ratio(attributed, total_gt, ("attributed", "total_gt"))


def _cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    u, v = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"embedding dimensions differ: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def answer_relevancy(query_embedding: Sequence[float] | np.ndarray,
                     synthetic_embeddings: Sequence[Sequence[float] | np.ndarray]) -> float:
    """Mean cosine between the question and each question generated from the answer."""
    if len(synthetic_embeddings) == 0:
        raise ValueError("answer_relevancy needs at least one synthetic query embedding")
    return float(np.mean([_cosine(query_embedding, s) for s in synthetic_embeddings]))


def f1_score(tp: int, fp: int, fn: int) -> float:
    if min(tp, fp, fn) < 0:
        raise ValueError("tp, fp and fn must be non-negative")
    denom = tp + 0.5 * (fp + fn)
    return tp / denom if denom else 0.0


def answer_correctness(tp: int, fp: int, fn: int, answer_embedding: Sequence[float] | np.ndarray,
                       truth_embedding: Sequence[float] | np.ndarray,
                       w: float = DEFAULT_CORRECTNESS_WEIGHT) -> float:
    """``w * F1 + (1 - w) * cosine(answer, truth)``."""
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0, 1]")
    return w * f1_score(tp, fp, fn) + (1.0 - w) * _cosine(answer_embedding, truth_embedding)
