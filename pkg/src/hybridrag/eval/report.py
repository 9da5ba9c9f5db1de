"""Samples, per-query rows and aggregate reports."""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Sequence

CATEGORIES = ("AACSB", "HYBRID", "INST")
METRICS = ("context_relevancy", "faithfulness", "answer_relevancy", "context_recall", "answer_correctness")
_CATEGORY_ALIASES = {"HYB": "HYBRID", "INSTITUTION": "INST"}


def normalize_category(value: str) -> str:
    cat = _CATEGORY_ALIASES.get(value.strip().upper(), value.strip().upper())
    if cat not in CATEGORIES:
        raise ValueError(f"unknown category {value!r}")
    return cat


def round_half_up(value: float, places: int = 3) -> float:
    """Display rounding: 0.8125 -> 0.813 (``round`` would give banker's 0.812)."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass
class EvalSample:
    q_id: int
    category: str
    question: str
    ground_truth: str
    answer: str
    contexts: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.category = normalize_category(self.category)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "EvalSample":
        return cls(
            q_id=int(data["qID"]),
            category=str(data["category"]),
            question=str(data["question"]),
            ground_truth=str(data.get("ground_truth", data.get("groundTruth", ""))),
            answer=str(data.get("answer", "")),
            contexts=[str(c) for c in data.get("contexts", [])],
        )


@dataclass
class JudgeOutputs:
    claims_total: int = 0
    claims_supported: int = 0
    synthetic_queries: list[str] = field(default_factory=list)
    relevant_sentences: int = 0
    total_context_sentences: int = 0
    attributed_gt_sentences: int = 0
    total_gt_sentences: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        counts = (self.claims_total, self.claims_supported, self.relevant_sentences, self.total_context_sentences,
                  self.attributed_gt_sentences, self.total_gt_sentences, self.tp, self.fp, self.fn)
        if any(c < 0 for c in counts):
            raise ValueError("judge counts must be non-negative")
        if self.claims_supported > self.claims_total:
            raise ValueError("claims_supported exceeds claims_total")
        if self.relevant_sentences > self.total_context_sentences:
            raise ValueError("relevant_sentences exceeds total_context_sentences")
        if self.attributed_gt_sentences > self.total_gt_sentences:
            raise ValueError("attributed_gt_sentences exceeds total_gt_sentences")

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "JudgeOutputs":
        return cls(
            claims_total=int(data.get("claimsTotal", 0)),
            claims_supported=int(data.get("claimsSupported", 0)),
            synthetic_queries=[str(q) for q in data.get("syntheticQueries", [])],
            relevant_sentences=int(data.get("relevantSentences", 0)),
            total_context_sentences=int(data.get("totalContextSentences", 0)),
            attributed_gt_sentences=int(data.get("attributedGtSentences", 0)),
            total_gt_sentences=int(data.get("totalGtSentences", 0)),
            tp=int(data.get("tp", 0)),
            fp=int(data.get("fp", 0)),
            fn=int(data.get("fn", 0)),
        )


@dataclass(frozen=True)
class MetricRow:
    context_relevancy: float
    faithfulness: float
    answer_relevancy: float
    context_recall: float
    answer_correctness: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, m) for m in METRICS)

    def rounded(self) -> tuple[float, ...]:
        return tuple(round_half_up(v) for v in self.values())


@dataclass(frozen=True)
class Summary:
    mean: MetricRow
    median: MetricRow
    min: MetricRow
    max: MetricRow


@dataclass
class MetricReport:
    rows: list[tuple[int, str, MetricRow]]
    summary: Summary
    category_means: dict[str, MetricRow]

    def to_json(self) -> dict[str, Any]:
        def row_json(r: MetricRow) -> dict[str, float]:
            return {m: round_half_up(v) for m, v in zip(METRICS, r.values())}

        return {
            "rows": [{"qID": q, "category": c, **row_json(r)} for q, c, r in self.rows],
            "summary": {name: row_json(getattr(self.summary, name)) for name in ("mean", "median", "min", "max")},
            "categoryMeans": {c: row_json(r) for c, r in self.category_means.items()},
        }

    def to_text(self) -> str:
        header = ("", *METRICS)
        lines: list[tuple[str, ...]] = [header]
        for name in ("mean", "median", "min", "max"):
            lines.append((name.capitalize(), *(f"{v:.3f}" for v in getattr(self.summary, name).rounded())))
        lines.append(("",) * len(header))
        lines.append(("qID", *METRICS))
        for q, _, r in self.rows:
            lines.append((str(q), *(f"{v:.3f}" for v in r.rounded())))
        if self.category_means:
            lines.append(("",) * len(header))
            lines.append(("category", *METRICS))
            for c, r in self.category_means.items():
                lines.append((c, *(f"{v:.3f}" for v in r.rounded())))
        widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
        return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in lines)


def _stat_row(rows: Sequence[MetricRow], fn) -> MetricRow:
    return MetricRow(*(fn([getattr(r, m) for r in rows]) for m in METRICS))


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def aggregate(rows: Sequence[tuple[int, str, MetricRow]]) -> MetricReport:
    """Mean, median, min and max per metric plus per-category means.

    Full precision throughout; rounding only happens when rendering. Rows are
    kept sorted by qID so the report does not depend on input order.
    """
    if not rows:
        raise ValueError("aggregate needs at least one row")
    ordered = sorted(rows, key=lambda r: r[0])
    metric_rows = [r for _, _, r in ordered]
    summary = Summary(
        mean=_stat_row(metric_rows, _mean),
        median=_stat_row(metric_rows, statistics.median),
        min=_stat_row(metric_rows, min),
        max=_stat_row(metric_rows, max),
    )
    by_cat: dict[str, list[MetricRow]] = {}
    for _, cat, r in ordered:
        by_cat.setdefault(cat, []).append(r)
    means = {c: _stat_row(by_cat[c], _mean) for c in CATEGORIES if c in by_cat}
    return MetricReport(list(ordered), summary, means)


def report_json_text(report: MetricReport) -> str:
    return json.dumps(report.to_json(), indent=2)
