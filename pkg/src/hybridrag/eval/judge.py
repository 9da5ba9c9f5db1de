"""LLM-as-judge: turn a sample into the counts the metrics consume."""
from __future__ import annotations

import json
import re
from typing import Any

from ..provider import Provider, Task
from .metrics import split_sentences
from .report import EvalSample, JudgeOutputs

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\s*\n?(.*?)\n?```$", re.DOTALL)

CLAIMS_PROMPT = """\
Break the answer into short standalone factual claims. For each claim decide whether the
context supports it. Reply with JSON only: {{"claims": [{{"claim": "...", "supported": true}}]}}

Context:
{context}

Question: {question}
Answer: {answer}"""

SYNTHETIC_PROMPT = """\
Write {n} questions that the answer below would be a good reply to.
Reply with JSON only: {{"questions": ["...", "..."]}}

Answer: {answer}"""

RELEVANCE_PROMPT = """\
Below are numbered sentences from retrieved context. List the numbers of the sentences that
are needed to answer the question. Reply with JSON only: {{"relevant": [0, 2]}}

Question: {question}
Sentences:
{sentences}"""

ATTRIBUTION_PROMPT = """\
Below are numbered sentences of a reference answer. List the numbers of the sentences that
can be attributed to the context. Reply with JSON only: {{"attributed": [0, 1]}}

Context:
{context}

Sentences:
{sentences}"""

STATEMENTS_PROMPT = """\
Compare the answer with the reference answer statement by statement. TP are statements in
both, FP are statements only in the answer, FN are statements only in the reference.
Reply with JSON only: {{"tp": ["..."], "fp": ["..."], "fn": ["..."]}}

Question: {question}
Answer: {answer}
Reference: {ground_truth}"""


class JudgeOutputError(ValueError):
    """The judge reply could not be parsed into the expected JSON."""


def _json_reply(reply: str, key: str) -> Any:
    text = reply.strip()
    match = _FENCE_RE.match(text)
    if match:
        text = match.group(1)
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise JudgeOutputError(f"judge reply is not JSON: {exc}") from None
    if not isinstance(data, dict) or key not in data:
        raise JudgeOutputError(f"judge reply lacks {key!r}")
    return data[key]


def _indices(value: Any, upper: int, key: str) -> int:
    if not isinstance(value, list):
        raise JudgeOutputError(f"{key!r} must be a list")
    try:
        picked = {int(i) for i in value}
    except (TypeError, ValueError):
        raise JudgeOutputError(f"{key!r} must hold integers") from None
    return len({i for i in picked if 0 <= i < upper})


def _numbered(sentences: list[str]) -> str:
    return "\n".join(f"{i}. {s}" for i, s in enumerate(sentences))


class LLMJudge:
    def __init__(self, provider: Provider, synthetic_count: int = 3) -> None:
        self.provider = provider
        self.synthetic_count = synthetic_count

    def _ask(self, prompt: str) -> str:
        return self.provider.ask(Task.JUDGE, prompt)

    def judge(self, sample: EvalSample) -> JudgeOutputs:
        context = "\n".join(sample.contexts)
        claims = _json_reply(self._ask(CLAIMS_PROMPT.format(
            context=context, question=sample.question, answer=sample.answer)), "claims")
        if not isinstance(claims, list):
            raise JudgeOutputError("'claims' must be a list")
        supported = sum(1 for c in claims if isinstance(c, dict) and c.get("supported") is True)

        questions = _json_reply(self._ask(SYNTHETIC_PROMPT.format(
            n=self.synthetic_count, answer=sample.answer)), "questions")
        if not isinstance(questions, list):
            raise JudgeOutputError("'questions' must be a list")

        ctx_sentences = [s for c in sample.contexts for s in split_sentences(c)]
        relevant = 0
        if ctx_sentences:
            relevant = _indices(_json_reply(self._ask(RELEVANCE_PROMPT.format(
                question=sample.question, sentences=_numbered(ctx_sentences))), "relevant"),
                len(ctx_sentences), "relevant")

        gt_sentences = split_sentences(sample.ground_truth)
        attributed = 0
        if gt_sentences:
            attributed = _indices(_json_reply(self._ask(ATTRIBUTION_PROMPT.format(
                context=context, sentences=_numbered(gt_sentences))), "attributed"),
                len(gt_sentences), "attributed")

        reply = self._ask(STATEMENTS_PROMPT.format(
            question=sample.question, answer=sample.answer, ground_truth=sample.ground_truth))
        counts = {}
        for key in ("tp", "fp", "fn"):
            items = _json_reply(reply, key)
            if not isinstance(items, list):
                raise JudgeOutputError(f"{key!r} must be a list")
            counts[key] = len(items)

        return JudgeOutputs(
            claims_total=len(claims),
            claims_supported=supported,
            synthetic_queries=[str(q) for q in questions if str(q).strip()],
            relevant_sentences=relevant,
            total_context_sentences=len(ctx_sentences),
            attributed_gt_sentences=attributed,
            total_gt_sentences=len(gt_sentences),
            **counts,
        )
