from __future__ import annotations

import json
import random
import threading

import pytest

from hybridrag.graphstore import (
    CorruptSnapshotError,
    DanglingEndpointError,
    EdgeRecord,
    GraphStore,
    InvalidPropertyError,
    InvalidRecordError,
    NodeRecord,
    SnapshotVersionError,
)


def _pair(store: GraphStore) -> None:
    store.upsert_node(NodeRecord("c1", ["Chunk"], {"text": "a"}))
    store.upsert_node(NodeRecord("c2", ["Chunk"], {"text": "b"}))


def test_upsert_new_node_increments_count():
    store = GraphStore()
    store.upsert_node(NodeRecord("n1", ["Thing"]))
    assert store.node_count == 1


def test_upsert_merges_properties_new_keys_win():
    store = GraphStore()
    store.upsert_node(NodeRecord("n1", ["Thing"], {"a": 1, "b": "old"}))
    store.upsert_node(NodeRecord("n1", ["Thing"], {"b": "new", "c": True}))
    assert store.node_count == 1
    assert store.get_node("n1").properties == {"a": 1, "b": "new", "c": True}


@pytest.mark.parametrize("bad", [{"k": {"nested": 1}}, {"k": [1, 2]}, {"k": float("nan")}, {"k": None}])
def test_invalid_property_values_rejected(bad):
    store = GraphStore()
    with pytest.raises(InvalidPropertyError):
        store.upsert_node(NodeRecord("n1", ["Thing"], bad))
    assert store.node_count == 0


def test_list_of_text_is_allowed():
    store = GraphStore()
    store.upsert_node(NodeRecord("n1", ["Thing"], {"tags": ["x", "y"]}))
    assert store.get_node("n1").properties["tags"] == ["x", "y"]


def test_edge_create_duplicate_and_dangling():
    store = GraphStore()
    _pair(store)
    store.upsert_edge(EdgeRecord("NEXT", "c1", "c2"))
    assert store.edge_count == 1
    store.upsert_edge(EdgeRecord("NEXT", "c1", "c2"))
    assert store.edge_count == 1
    with pytest.raises(DanglingEndpointError):
        store.upsert_edge(EdgeRecord("NEXT", "c2", "missing"))
    assert store.edge_count == 1


def test_relationship_type_must_be_upper_snake():
    store = GraphStore()
    _pair(store)
    with pytest.raises(InvalidRecordError):
        store.upsert_edge(EdgeRecord("next", "c1", "c2"))


def test_get_node_returns_a_copy():
    store = GraphStore()
    store.upsert_node(NodeRecord("n1", ["Thing"], {"a": 1}))
    store.get_node("n1").properties["a"] = 99
    assert store.get_node("n1").properties["a"] == 1


def test_walk_chain_follows_next_edges():
    store = GraphStore()
    for i in range(4):
        store.upsert_node(NodeRecord(f"c{i}", ["Chunk"]))
    for a, b in [(2, 3), (0, 1), (1, 2)]:
        store.upsert_edge(EdgeRecord("NEXT", f"c{a}", f"c{b}"))
    assert store.walk_chain("c0") == ["c0", "c1", "c2", "c3"]


def test_remove_edge():
    store = GraphStore()
    _pair(store)
    eid = store.upsert_edge(EdgeRecord("NEXT", "c1", "c2"))
    store.remove_edge(eid)
    assert store.edge_count == 0 and store.find_edge("c1", "NEXT", "c2") is None


# -- schema ---------------------------------------------------------------


def _schema_oracle(store: GraphStore):
    labels: dict[str, set[str]] = {}
    for node in store.nodes():
        for label in node.labels:
            labels.setdefault(label, set()).update(node.properties)
    triples = set()
    for edge in store.edges():
        for src in store.get_node(edge.from_id).labels:
            for dst in store.get_node(edge.to_id).labels:
                triples.add((src, edge.rel_type, dst))
    return {k: frozenset(v) for k, v in labels.items()}, frozenset(triples)


def test_empty_store_has_empty_schema():
    schema = GraphStore().derive_schema()
    assert schema.is_empty()


def test_sample_graph_schema_has_learning_goal_triple(sample_store):
    schema = sample_store.derive_schema()
    assert ("Program", "HAS_LEARNING_GOAL", "Learning objective") in schema.rel_patterns
    assert "`Learning objective`" in schema.to_text()


def test_adding_a_label_adds_exactly_that_label(sample_store):
    before = sample_store.derive_schema()
    sample_store.upsert_node(NodeRecord("x:1", ["Committee"], {"name": "AoL"}))
    after = sample_store.derive_schema()
    assert set(after.node_labels) - set(before.node_labels) == {"Committee"}
    assert (after.node_labels, after.rel_patterns) == _schema_oracle(sample_store)


def test_schema_text_is_stable(sample_store):
    assert sample_store.derive_schema().to_text() == sample_store.derive_schema().to_text()


# -- snapshots ------------------------------------------------------------


def _random_store(rng: random.Random, n_nodes: int, n_edges: int) -> GraphStore:
    store = GraphStore()
    labels = ["A", "B", "Learning objective"]
    for i in range(n_nodes):
        props = {"i": i, "name": f"node {i}", "w": rng.random(), "flag": rng.random() < 0.5}
        if rng.random() < 0.3:
            props["tags"] = [rng.choice("xyz") for _ in range(2)]
        store.upsert_node(NodeRecord(f"n{i}", [rng.choice(labels)], props))
    for _ in range(n_edges):
        a, b = rng.randrange(n_nodes), rng.randrange(n_nodes)
        store.upsert_edge(EdgeRecord(rng.choice(["R", "NEXT", "HAS_X"]), f"n{a}", f"n{b}", {"p": 1}))
    return store


def _as_sets(store: GraphStore):
    nodes = {json.dumps(n.to_json(), sort_keys=True) for n in store.nodes()}
    edges = {json.dumps(e.to_json(), sort_keys=True) for e in store.edges()}
    return nodes, edges


def test_empty_snapshot_round_trip(tmp_path):
    path = tmp_path / "g.jsonl"
    GraphStore().snapshot(path)
    loaded = GraphStore.load(path)
    assert loaded.node_count == 0 and loaded.edge_count == 0


def test_random_store_round_trip(tmp_path):
    store = _random_store(random.Random(7), 100, 250)
    path = tmp_path / "g.jsonl"
    store.snapshot(path)
    assert _as_sets(GraphStore.load(path)) == _as_sets(store)


def test_truncated_snapshot_is_corrupt(tmp_path):
    store = _random_store(random.Random(1), 10, 10)
    path = tmp_path / "g.jsonl"
    store.snapshot(path)
    data = path.read_text()
    path.write_text(data[: len(data) // 2])
    with pytest.raises(CorruptSnapshotError):
        GraphStore.load(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "g.jsonl"
    GraphStore().snapshot(path)
    header = json.loads(path.read_text().splitlines()[0])
    header["format_version"] = 99
    path.write_text(json.dumps(header) + "\n")
    with pytest.raises(SnapshotVersionError):
        GraphStore.load(path)


def test_garbage_file_is_corrupt(tmp_path):
    path = tmp_path / "g.jsonl"
    path.write_bytes(b"\xff\xfe not json")
    with pytest.raises(CorruptSnapshotError):
        GraphStore.load(path)


def test_no_dangling_edges_after_random_upserts():
    store = _random_store(random.Random(3), 40, 120)
    ids = {n.node_id for n in store.nodes()}
    assert all(e.from_id in ids and e.to_id in ids for e in store.edges())


def test_concurrent_readers_see_whole_upserts():
    store = GraphStore()
    seen_bad = []

    def writer():
        for i in range(300):
            store.upsert_node(NodeRecord(f"n{i}", ["A"], {"a": i, "b": i}))

    def reader():
        for _ in range(300):
            for node in store.nodes("A"):
                if node.properties.get("a") != node.properties.get("b"):
                    seen_bad.append(node.node_id)

    threads = [threading.Thread(target=writer)] + [threading.Thread(target=reader) for _ in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not seen_bad and store.node_count == 300
