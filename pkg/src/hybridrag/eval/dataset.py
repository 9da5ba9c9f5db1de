"""JSON-lines datasets and end-to-end scoring.

A judged line is an eval sample plus ``judge`` (JudgeOutputs fields in
camelCase) and optionally ``embeddings`` with ``query``, ``synthetic``,
``answer`` and ``truth`` vectors. Lines without embeddings are embedded
through the provider.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..provider import Provider
from .judge import LLMJudge
from .metrics import (
    DEFAULT_CORRECTNESS_WEIGHT,
    answer_correctness,
    answer_relevancy,
    context_recall,
    context_relevance,
    faithfulness,
)
from .report import EvalSample, JudgeOutputs, MetricReport, MetricRow, aggregate


@dataclass
class Embeddings:
    query: np.ndarray
    synthetic: list[np.ndarray]
    answer: np.ndarray
    truth: np.ndarray

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Embeddings":
        vec = lambda v: np.asarray(v, dtype=np.float64)  # noqa: E731
        return cls(vec(data["query"]), [vec(s) for s in data["synthetic"]], vec(data["answer"]), vec(data["truth"]))


@dataclass
class JudgedSample:
    sample: EvalSample
    judge: JudgeOutputs
    embeddings: Embeddings | None = None


def _read_jsonl(path: str | os.PathLike[str]) -> list[dict[str, Any]]:
    out = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{n}: invalid JSON: {exc}") from None
    return out


def load_samples(path: str | os.PathLike[str]) -> list[EvalSample]:
    return [EvalSample.from_json(d) for d in _read_jsonl(path)]


def load_judged(path: str | os.PathLike[str]) -> list[JudgedSample]:
    out = []
    for d in _read_jsonl(path):
        emb = Embeddings.from_json(d["embeddings"]) if d.get("embeddings") else None
        out.append(JudgedSample(EvalSample.from_json(d), JudgeOutputs.from_json(d["judge"]), emb))
    return out


def _embeddings_for(item: JudgedSample, provider: Provider | None) -> Embeddings:
    if item.embeddings is not None:
        return item.embeddings
    if provider is None:
        raise ValueError(f"qID {item.sample.q_id}: no embeddings and no provider to compute them")
    queries = item.judge.synthetic_queries
    if not queries:
        raise ValueError(f"qID {item.sample.q_id}: judge produced no synthetic queries")
    texts = [item.sample.question, item.sample.answer or " ", item.sample.ground_truth or " ", *queries]
    vecs = provider.embed(texts)
    return Embeddings(vecs[0], list(vecs[3:]), vecs[1], vecs[2])


def score(item: JudgedSample, provider: Provider | None = None,
          w: float = DEFAULT_CORRECTNESS_WEIGHT) -> MetricRow:
    j = item.judge
    emb = _embeddings_for(item, provider)
    return MetricRow(
        context_relevancy=context_relevance(j.relevant_sentences, j.total_context_sentences),
        faithfulness=faithfulness(j.claims_supported, j.claims_total),
        answer_relevancy=answer_relevancy(emb.query, emb.synthetic),
        context_recall=context_recall(j.attributed_gt_sentences, j.total_gt_sentences),
        answer_correctness=answer_correctness(j.tp, j.fp, j.fn, emb.answer, emb.truth, w),
    )


def evaluate_judged(items: Sequence[JudgedSample], provider: Provider | None = None,
                    w: float = DEFAULT_CORRECTNESS_WEIGHT) -> MetricReport:
    return aggregate([(i.sample.q_id, i.sample.category, score(i, provider, w)) for i in items])


def judge_samples(samples: Sequence[EvalSample], provider: Provider, max_workers: int = 4) -> list[JudgedSample]:
    judge = LLMJudge(provider)
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        outputs = list(pool.map(judge.judge, samples))
    return [JudgedSample(s, o) for s, o in zip(samples, outputs)]
