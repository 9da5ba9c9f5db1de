from __future__ import annotations

import csv
import json
import math
import random
import re
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridrag.graphstore import GraphStore
from hybridrag.ingest import (
    AACSB_ROOT_ID,
    Chunk,
    ChunkingConfig,
    DuplicateDocumentError,
    RawDocument,
    StandardRecord,
    StandardsImportError,
    build_document_hierarchy,
    build_standard_hierarchy,
    chunk,
    chunk_texts,
    create_docsource,
    deoverlap,
    import_standards,
    ingest_documents,
    load_documents,
    load_standards_json,
    preprocess,
    propose_labels,
    stopwords,
    tfidf_table,
    tokens,
)
from hybridrag.ingest.hierarchy import (
    FIRST_CHUNK,
    HAS_CHUNK,
    HAS_COMPONENT,
    HAS_DOCUMENT,
    NEXT,
    component_id,
    document_id,
    standard_id,
)

ALPHABET = re.compile(r"^[a-z0-9.\n ]*$")


# -- preprocess -------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("1.1", "1.1"),
        ("", ""),
        ("The Mission, And Vision!", "mission vision"),
        ("Standard 8.1: Faculty's output\nSecond  line", "standard 8.1 facultys output\nsecond line"),
    ],
)
def test_preprocess_examples(raw, expected):
    assert preprocess(raw) == expected


def test_stopword_list_is_pinned():
    words = stopwords()
    assert 150 <= len(words) <= 200
    assert {"the", "and", "of"} <= words


@settings(max_examples=10_000, deadline=None)
@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60)
       | st.text(alphabet="aAbB .,\n\t'!1-", max_size=40))
def test_preprocess_idempotent_and_alphabet(text):
    once = preprocess(text)
    assert ALPHABET.match(once)
    assert preprocess(once) == once


def test_preprocess_word_boundaries():
    assert preprocess("theory andrew") == "theory andrew"


# -- chunking ---------------------------------------------------------------

TEN = " ".join(f"t{i}" for i in range(10))


def test_fixed_chunks_4_4_2():
    chunks = chunk(TEN, ChunkingConfig("fixed", 4, 0))
    assert [c.token_count for c in chunks] == [4, 4, 2]


def test_overlap_starts():
    chunks = chunk(TEN, ChunkingConfig("overlap", 4, 2))
    assert [int(tokens(c.text)[0][1:]) for c in chunks] == [0, 2, 4, 6, 8]


def test_sentence_strategy_single_sentence():
    assert len(chunk("a short sentence.", ChunkingConfig("sentence", 10, 0))) == 1


def test_sentence_strategy_packs_whole_sentences():
    text = "one two three. four five. six seven eight nine.\nten"
    windows = [c.text for c in chunk(text, ChunkingConfig("sentence", 5, 0))]
    assert windows == ["one two three. four five.", "six seven eight nine. ten"]


def test_sentence_strategy_keeps_outline_numbers():
    windows = [c.text for c in chunk("1.1 school plan. 1.2 school budget.", ChunkingConfig("sentence", 4, 0))]
    assert windows == ["1.1 school plan.", "1.2 school budget."]


def test_empty_text_no_chunks():
    assert chunk("", ChunkingConfig()) == []


def test_chunk_ids_and_seq():
    chunks = chunk(TEN, ChunkingConfig("fixed", 3, 0), parent_id="doc")
    assert [c.chunk_id for c in chunks] == [f"doc:chunk:{i}" for i in range(4)]
    assert [c.seq_index for c in chunks] == [0, 1, 2, 3]


@pytest.mark.parametrize("bad", [dict(strategy="semantic"), dict(chunk_tokens=0), dict(chunk_tokens=4, overlap_tokens=4)])
def test_chunking_config_invariants(bad):
    with pytest.raises(ValueError):
        ChunkingConfig(**bad)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(["a", "b.", "1.1", "cc", "d\n"]), max_size=80), st.integers(1, 12), st.data())
def test_chunk_partition_properties(words, size, data):
    text = " ".join(words)
    toks = tokens(text)
    for strategy in ("fixed", "sentence"):
        chunks = chunk(text, ChunkingConfig(strategy, size, 0))
        assert [t for c in chunks for t in tokens(c.text)] == toks
        assert all(0 < c.token_count <= size for c in chunks)
    overlap = data.draw(st.integers(0, size - 1))
    cfg = ChunkingConfig("overlap", size, overlap)
    assert deoverlap(chunk(text, cfg), cfg) == toks


# -- standards import -------------------------------------------------------


def test_import_fixture_counts(fixtures, tmp_path):
    out = tmp_path / "standards.json"
    sections, standards = import_standards(fixtures("sections.csv"), fixtures("standards.csv"), out)
    assert len(sections) == 3 and len(standards) == 9
    assert [s.standardNum for s in standards] == list(range(1, 10))
    assert load_standards_json(out) == (sections, standards)


def test_standard_8_formal_round_trips(fixtures):
    with open(fixtures("standards.csv"), newline="", encoding="utf-8") as fh:
        raw = {row["Standard_num"]: row for row in csv.DictReader(fh)}
    _, standards = import_standards(fixtures("sections.csv"), fixtures("standards.csv"))
    eight = standards[7]
    assert raw["8"]["Standard_formal"].startswith("8.1 The school's faculty collectively produce")
    assert eight.standardFormal == preprocess(raw["8"]["Standard_formal"])
    assert eight.standardFormal.startswith("8.1 schools faculty collectively produce")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def test_duplicate_standard_num(fixtures, tmp_path):
    with open(fixtures("standards.csv"), newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    path = _write_csv(tmp_path / "s.csv", rows[0], rows[1:] + [rows[1]])
    with pytest.raises(StandardsImportError, match="duplicate"):
        import_standards(fixtures("sections.csv"), path)


def test_header_mismatch(fixtures, tmp_path):
    path = _write_csv(tmp_path / "sec.csv", ["Num", "Title", "Description"], [["1", "a", "b"]])
    with pytest.raises(StandardsImportError, match="headers"):
        import_standards(path, fixtures("standards.csv"))


def test_non_integer_section(fixtures, tmp_path):
    path = _write_csv(tmp_path / "sec.csv", ["Section_Num", "Section_Title", "Section_Description"],
                      [["one", "a", "b"]])
    with pytest.raises(StandardsImportError, match="non-integer"):
        import_standards(path, fixtures("standards.csv"))


# -- hierarchies ------------------------------------------------------------


def _standards_store(fixtures, cfg=None):
    store = GraphStore()
    sections, standards = import_standards(fixtures("sections.csv"), fixtures("standards.csv"))
    build_standard_hierarchy(store, sections, standards, cfg or ChunkingConfig("fixed", 20, 0))
    return store


def test_standard_hierarchy_counts(fixtures):
    store = _standards_store(fixtures)
    assert len(store.nodes("AACSB")) == 1
    assert len(store.nodes("Section")) == 3
    assert len(store.nodes("Standard")) == 9
    components = sum(len(store.nodes(l)) for l in ("Formal", "Definitions", "Basis", "Documentation"))
    assert components == 36
    for num in range(1, 10):
        assert len(store.out_edges(standard_id(num), HAS_COMPONENT)) == 4
    assert all(n.properties["nodeCat"] == "AACSB" for n in store.nodes())
    assert store.has_node(AACSB_ROOT_ID)


def test_standard_hierarchy_is_rerunnable(fixtures):
    store = _standards_store(fixtures)
    before = (store.node_count, store.edge_count)
    sections, standards = import_standards(fixtures("sections.csv"), fixtures("standards.csv"))
    build_standard_hierarchy(store, sections, standards, ChunkingConfig("fixed", 20, 0))
    assert (store.node_count, store.edge_count) == before


def test_one_component_three_chunks():
    from hybridrag.ingest import SectionRecord

    store = GraphStore()
    std = StandardRecord(1, 4, "Curriculum", "a b c d e f", "", "", "")
    build_standard_hierarchy(store, [SectionRecord(1, "S", "d")], [std], ChunkingConfig("fixed", 2, 0))
    formal = component_id(4, "formal")
    assert [t for _, t in chunk_texts(store, formal)] == ["a b", "c d", "e f"]
    assert len(store.out_edges(formal, HAS_CHUNK)) == 3
    assert len(store.edges(NEXT)) == 2
    assert store.get_node(formal).properties["parentStandardNum"] == 4
    assert chunk_texts(store, component_id(4, "basis")) == []


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50), st.randoms(use_true_random=False))
def test_next_chain_restores_order_for_shuffled_inserts(n, rng):
    store = GraphStore()
    ds = create_docsource(store, "/tmp/x", "2024-01-01T00:00:00+00:00", "imp")
    raw = RawDocument("/tmp/x/doc.txt", "", doc_uuid="u1")
    parent = document_id("u1")
    chunks = [Chunk(f"{parent}:chunk:{i}", parent, i, f"text {i}") for i in range(n)]
    shuffled = chunks[:]
    rng.shuffle(shuffled)
    build_document_hierarchy(store, ds, raw, shuffled)
    assert [t for _, t in chunk_texts(store, parent)] == [c.text for c in chunks]
    assert store.out_edges(parent, FIRST_CHUNK)[0].to_id == chunks[0].chunk_id


def test_gap_in_seq_index_rejected():
    from hybridrag.ingest import HierarchyError

    store = GraphStore()
    ds = create_docsource(store, "/tmp", import_id="i")
    parent = document_id("u")
    with pytest.raises(HierarchyError):
        build_document_hierarchy(store, ds, RawDocument("a.txt", "", doc_uuid="u"),
                                 [Chunk("c0", parent, 0, "x"), Chunk("c2", parent, 2, "y")])


def test_two_documents_one_docsource(fixtures):
    store = GraphStore()
    docs = load_documents(fixtures("documents.json"))
    ds, doc_ids = ingest_documents(store, docs, ChunkingConfig("fixed", 15, 0))
    assert len(store.nodes("Docsource")) == 1 and len(doc_ids) == 2
    assert {e.to_id for e in store.out_edges(ds, HAS_DOCUMENT)} == set(doc_ids)
    assert store.find_edge(doc_ids[0], NEXT, doc_ids[1]) is not None
    first = store.get_node(doc_ids[0]).properties
    assert first["modelSummary"] == "" and "standardClassification" not in first
    assert all(n.properties["nodeCat"] == "INSTITUTION" for n in store.nodes())
    assert " ".join(t for _, t in chunk_texts(store, doc_ids[1])).split() == preprocess(docs[1].text).split()


def test_empty_document_has_no_chunks():
    store = GraphStore()
    _, (doc,) = ingest_documents(store, [RawDocument("empty.txt", "", doc_uuid="e")])
    assert store.has_node(doc) and chunk_texts(store, doc) == []


def test_duplicate_doc_uuid():
    store = GraphStore()
    ingest_documents(store, [RawDocument("a.txt", "some words", doc_uuid="same")])
    with pytest.raises(DuplicateDocumentError):
        ingest_documents(store, [RawDocument("b.txt", "other words", doc_uuid="same")])
    with pytest.raises(DuplicateDocumentError):
        ingest_documents(GraphStore(), [RawDocument("a", "x", doc_uuid="d"), RawDocument("b", "y", doc_uuid="d")])


def test_raw_document_json_generates_uuid(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"sourcePath": "x/y.txt", "text": "hello", "metadata": {"page": 3}}))
    (doc,) = load_documents(path)
    assert len(doc.doc_uuid) == 36 and doc.metadata == {"page": 3}


def test_every_node_has_one_node_category(fixtures):
    store = _standards_store(fixtures)
    ingest_documents(store, load_documents(fixtures("documents.json")))
    assert all(n.properties.get("nodeCat") in ("AACSB", "INSTITUTION") for n in store.nodes())


# -- TF-IDF -------------------------------------------------------------------


def tfidf_oracle(corpus):
    n = len(corpus)
    docs = [d.lower().split() for d in corpus]
    out = []
    for doc in docs:
        row = {}
        for term in set(doc):
            df = sum(1 for d in docs if term in d)
            row[term] = doc.count(term) / len(doc) * (math.log((1 + n) / (1 + df)) + 1)
        out.append(row)
    return out


def test_idf_is_one_for_term_in_every_doc():
    table = tfidf_table(["alpha beta", "alpha"])
    assert table[1]["alpha"] == pytest.approx(1.0)


def test_table_matches_oracle():
    corpus = ["faculty faculty research", "curriculum", "faculty curriculum assessment report"]
    for got, want in zip(tfidf_table(corpus), tfidf_oracle(corpus)):
        assert got.keys() == want.keys()
        for k in got:
            assert got[k] == pytest.approx(want[k])


def test_two_doc_example_uses_formula_ranking():
    corpus = ["faculty faculty research", "curriculum"]
    best = Counter()
    for row in tfidf_oracle(corpus):
        for term, score in row.items():
            best[term] = max(best[term], score)
    expected = sorted(best, key=lambda t: (-best[t], t))
    assert expected[0] == "curriculum"
    assert propose_labels(corpus, 1) == expected[:1]
    assert propose_labels(corpus, 3) == expected


def test_top_n_larger_than_vocabulary_and_stopwords():
    assert sorted(propose_labels(["the program and the goal"], 50)) == ["goal", "program"]


def test_top_n_must_be_positive():
    with pytest.raises(ValueError):
        propose_labels(["x"], 0)
    with pytest.raises(ValueError):
        propose_labels([], 1)


def test_ties_alphabetical():
    assert propose_labels(["zeta alpha"], 2) == ["alpha", "zeta"]


def test_random_corpora_top_label_is_argmax():
    rng = random.Random(0)
    vocab = ["faculty", "research", "learning", "goal", "program"]
    for _ in range(50):
        corpus = [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 8))) for _ in range(rng.randint(1, 4))]
        rows = tfidf_oracle(corpus)
        best = max(max(r.values()) for r in rows)
        top = propose_labels(corpus, 1)[0]
        assert max(r.get(top, 0) for r in rows) == pytest.approx(best)
