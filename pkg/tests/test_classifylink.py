from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridrag.classifylink import (
    ALIGNS_WITH,
    LinkIntegrityError,
    build_classification_prompt,
    classify_document,
    extract_classification,
    link_documents,
    standard_descriptions,
    summarize_document,
)
from hybridrag.graphstore import GraphStore
from hybridrag.ingest import (
    ChunkingConfig,
    build_standard_hierarchy,
    import_standards,
    ingest_documents,
    load_documents,
)
from hybridrag.ingest.hierarchy import standard_id
from hybridrag.provider import MockProvider, SummaryConfig, Task

REPLIES = json.loads((Path(__file__).parent / "fixtures" / "classifier_replies.json").read_text())


@pytest.fixture
def bridged(fixtures):
    store = GraphStore()
    sections, standards = import_standards(fixtures("sections.csv"), fixtures("standards.csv"))
    build_standard_hierarchy(store, sections, standards, ChunkingConfig("fixed", 40, 0))
    _, docs = ingest_documents(store, load_documents(fixtures("documents.json")), ChunkingConfig("fixed", 30, 0))
    return store, docs


@pytest.mark.parametrize("case", REPLIES, ids=[f"reply{i}" for i in range(len(REPLIES))])
def test_noisy_reply_fixture(case):
    assert extract_classification(case["reply"]) == (case["value"], case["via"], case["warning"])


@given(st.text())
def test_extraction_always_in_range(reply):
    value, via, warning = extract_classification(reply)
    assert 0 <= value <= 9
    assert warning == (via == "default")


def test_summary_then_classify_writes_properties(bridged):
    store, (article, minutes) = bridged
    mock = MockProvider(rules=[(r"(?i)innovators", "6"), (r"(?i)assessment", "The answer is 5."), (r".", "0")])
    summary = summarize_document(store, mock, article, SummaryConfig(40))
    assert summary and len(summary.split()) <= 40
    assert store.get_node(article).properties["modelSummary"] == summary
    result = classify_document(store, mock, article)
    assert (result.standard_classification, result.extracted_via) == (6, "direct")
    assert store.get_node(article).properties["standardClassification"] == 6
    prompt = mock.requests[-1].messages[-1].content
    assert "Document Classification" in prompt and "Standard 6:" in prompt and summary in prompt
    assert mock.requests[-1].task is Task.CLASSIFY and mock.requests[-1].temperature == 0.0


def test_missing_summary_skips_classification(bridged):
    store, (article, _) = bridged
    mock = MockProvider(rules=[(".", "6")])
    assert classify_document(store, mock, article) is None
    assert "standardClassification" not in store.get_node(article).properties
    assert mock.requests == []


def test_no_digit_defaults_to_zero_with_warning(bridged):
    store, (article, _) = bridged
    store.set_property(article, "modelSummary", "a summary")
    result = classify_document(store, MockProvider(rules=[(".", "there is no match")]), article)
    assert result.standard_classification == 0 and result.warning


def test_link_six_and_zero_then_rerun(bridged):
    store, (article, minutes) = bridged
    store.set_property(article, "standardClassification", 6)
    store.set_property(minutes, "standardClassification", 0)
    assert link_documents(store) == 1
    (edge,) = store.edges(ALIGNS_WITH)
    assert (edge.from_id, edge.to_id) == (article, standard_id(6))
    assert store.out_edges(minutes, ALIGNS_WITH) == []
    assert link_documents(store) == 0
    assert len(store.edges(ALIGNS_WITH)) == 1


def test_reclassification_moves_the_single_edge(bridged):
    store, (article, _) = bridged
    store.set_property(article, "standardClassification", 6)
    link_documents(store)
    store.set_property(article, "standardClassification", 7)
    assert link_documents(store) == 1
    assert [e.to_id for e in store.out_edges(article, ALIGNS_WITH)] == [standard_id(7)]
    store.set_property(article, "standardClassification", 0)
    link_documents(store)
    assert store.edges(ALIGNS_WITH) == []


def test_edges_match_standard_numbers(bridged):
    store, docs = bridged
    for doc, value in zip(docs, (6, 5)):
        store.set_property(doc, "standardClassification", value)
    link_documents(store)
    for edge in store.edges(ALIGNS_WITH):
        assert (store.get_node(edge.from_id).properties["standardClassification"]
                == store.get_node(edge.to_id).properties["standardNum"])


def test_missing_standard_is_integrity_error(fixtures):
    store = GraphStore()
    _, (doc, _) = ingest_documents(store, load_documents(fixtures("documents.json")))
    store.set_property(doc, "standardClassification", 3)
    with pytest.raises(LinkIntegrityError):
        link_documents(store)
    assert store.edges(ALIGNS_WITH) == []


def test_descriptions_fall_back_to_titles():
    descriptions = standard_descriptions(GraphStore())
    assert sorted(descriptions) == list(range(1, 10))
    assert "Learner Progression" in build_classification_prompt("s", descriptions)


def test_descriptions_use_store_formal_text(bridged):
    store, _ = bridged
    assert "schools faculty collectively produce" in standard_descriptions(store)[8]
