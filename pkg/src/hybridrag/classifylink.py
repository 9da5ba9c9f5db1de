"""Summarise institutional documents, classify them to a standard, and bridge the graphs."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .graphstore import EdgeRecord, GraphStore
from .graphstore.store import GraphStoreError
from .ingest.hierarchy import chunk_texts, standard_id
from .prompts import CLASSIFICATION, DEFAULT_STANDARD_TITLES, standards_block
from .provider import Provider, SummaryConfig, Task

logger = logging.getLogger(__name__)

ALIGNS_WITH = "ALIGNS_WITH"
_DIGIT_RE = re.compile(r"\b[0-9]\b")


class LinkIntegrityError(GraphStoreError):
    pass


class MissingSummaryError(ValueError):
    pass


@dataclass(frozen=True)
class ClassificationResult:
    document_node_id: str
    standard_classification: int
    raw_model_output: str
    extracted_via: str  # "direct" for a bare digit, "regex" when found inside prose, "default" when absent
    warning: bool = False


def extract_classification(reply: str) -> tuple[int, str, bool]:
    """Leftmost standalone digit in ``reply``: (value, via, warning)."""
    if reply.strip() in tuple("0123456789"):
        return int(reply.strip()), "direct", False
    match = _DIGIT_RE.search(reply)
    if match is None:
        return 0, "default", True
    return int(match.group()), "regex", False


def document_text(store: GraphStore, document_node_id: str) -> str:
    return "\n".join(text for _, text in chunk_texts(store, document_node_id))


def summarize_document(store: GraphStore, provider: Provider, document_node_id: str,
                       cfg: SummaryConfig | None = None) -> str:
    """Summarise the document's chunk text into ``modelSummary``.

    Documents without text keep an empty summary.
    """
    text = document_text(store, document_node_id)
    summary = provider.summarize(text, cfg) if text.strip() else ""
    store.set_property(document_node_id, "modelSummary", summary)
    return summary


def standard_descriptions(store: GraphStore) -> dict[int, str]:
    """Standard number -> title plus formal text, from the store when loaded."""
    out: dict[int, str] = {}
    for node in store.nodes("Standard"):
        num = node.properties.get("standardNum")
        if not isinstance(num, int):
            continue
        desc = str(node.properties.get("standardTitle", ""))
        formal = store.get_node(f"{node.node_id}:formal")
        if formal is not None and formal.properties.get("text"):
            desc = f"{desc}. {formal.properties['text']}"
        out[num] = desc
    return out or dict(DEFAULT_STANDARD_TITLES)


def build_classification_prompt(summary: str, descriptions: dict[int, str]) -> str:
    return CLASSIFICATION.format(standards=standards_block(descriptions), summary=summary)


def classify_document(store: GraphStore, provider: Provider, document_node_id: str) -> ClassificationResult | None:
    """Classify the stored summary and write ``standardClassification``.

    Returns None (and writes nothing) when the document has no summary yet.
    """
    node = store.get_node(document_node_id)
    if node is None:
        raise GraphStoreError(f"document node {document_node_id!r} not found")
    summary = node.properties.get("modelSummary")
    if not isinstance(summary, str) or not summary.strip():
        logger.warning("%s: no modelSummary, classification skipped", document_node_id)
        return None
    prompt = build_classification_prompt(summary, standard_descriptions(store))
    reply = provider.ask(Task.CLASSIFY, prompt)
    value, via, warning = extract_classification(reply)
    if warning:
        logger.warning("%s: no digit 0-9 in classifier reply %r; using 0", document_node_id, reply[:80])
    store.set_property(document_node_id, "standardClassification", value)
    return ClassificationResult(document_node_id, value, reply, via, warning)


def link_documents(store: GraphStore) -> int:
    """Create one ALIGNS_WITH edge per document classified 1..9.

    Stale edges (pointing at a different standard) are removed, so each
    document ends with zero or one bridge edge. Returns the number of edges
    created by this call.

    Raises:
        LinkIntegrityError: a classification names a Standard node that does
            not exist. Nothing is written in that case.
    """
    plan: list[tuple[str, str | None]] = []
    for doc in store.nodes("Document"):
        value = doc.properties.get("standardClassification")
        if not isinstance(value, int) or isinstance(value, bool):
            continue
        target = standard_id(value) if 1 <= value <= 9 else None
        if target is not None and not store.has_node(target):
            raise LinkIntegrityError(f"{doc.node_id} classified {value} but {target} is missing")
        plan.append((doc.node_id, target))
    created = 0
    for doc_id, target in plan:
        for edge in store.out_edges(doc_id, ALIGNS_WITH):
            if edge.to_id != target:
                store.remove_edge(edge.edge_id)
        if target is not None and store.find_edge(doc_id, ALIGNS_WITH, target) is None:
            store.upsert_edge(EdgeRecord(ALIGNS_WITH, doc_id, target))
            created += 1
    return created
