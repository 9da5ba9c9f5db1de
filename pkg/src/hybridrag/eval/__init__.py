"""Evaluation metrics, judging and aggregate reports."""
from .dataset import (
    Embeddings,
    JudgedSample,
    evaluate_judged,
    judge_samples,
    load_judged,
    load_samples,
    score,
)
from .judge import JudgeOutputError, LLMJudge
from .metrics import (
    DEFAULT_CORRECTNESS_WEIGHT,
    answer_correctness,
    answer_relevancy,
    context_recall,
    context_relevance,
    f1_score,
    faithfulness,
    split_sentences,
)
from .report import (
    CATEGORIES,
    METRICS,
    EvalSample,
    JudgeOutputs,
    MetricReport,
    MetricRow,
    Summary,
    aggregate,
    report_json_text,
    round_half_up,
)

__all__ = [
    "CATEGORIES", "DEFAULT_CORRECTNESS_WEIGHT", "METRICS", "Embeddings", "EvalSample", "JudgeOutputError",
    "JudgeOutputs", "JudgedSample", "LLMJudge", "MetricReport", "MetricRow", "Summary", "aggregate",
    "answer_correctness", "answer_relevancy", "context_recall", "context_relevance", "evaluate_judged",
    "f1_score", "faithfulness", "judge_samples", "load_judged", "load_samples", "report_json_text",
    "round_half_up", "score", "split_sentences",
]
