from __future__ import annotations

import json
import threading

import httpx
import pytest

from hybridrag.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, fixture_path, main
from hybridrag.config import ConfigError, load_config
from hybridrag.graphstore import GraphStore
from hybridrag.pipeline import Pipeline
from hybridrag.service import make_server
from hybridrag.vectorindex import VectorIndex
from hybridrag.workspace import graph_path, open_index, writer_lock, StoreBusyError

WORKED_QUERY = "Which learning objectives did our undergraduate program evaluate?"
FIVE_GOALS = ["Global Understanding", "Communication", "Analytical Skills", "Ethical Principles",
              "Core Business Knowledge"]


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "hybridrag.toml"
    path.write_text(
        'store_path = "kb"\n'
        "[provider]\n"
        'kind = "mock"\n'
        f'mock_script = "{fixture_path("worked_example_script.json")}"\n'
        "[chunking]\n"
        "chunk_tokens = 20\n"
        "overlap_tokens = 5\n"
    )
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def built(cfg, capsys):
    """A knowledge base taken through every ingestion command."""
    for argv in (["import-standards"], ["ingest", fixture_path("documents.json")], ["extract-kg"],
                 ["summarize-classify"], ["link"], ["embed"]):
        code, _, err = run(capsys, "--config", cfg, *argv)
        assert code == EXIT_OK, err
    return cfg


def test_import_standards_message(cfg, capsys):
    code, out, _ = run(capsys, "--config", cfg, "import-standards")
    assert code == EXIT_OK and out.strip() == "9 standards, 3 sections imported"
    first = graph_path(cfg.parent / "kb").read_bytes()
    assert run(capsys, "--config", cfg, "import-standards")[0] == EXIT_OK
    assert graph_path(cfg.parent / "kb").read_bytes() == first


def test_ingestion_commands(built, capsys):
    store = GraphStore.load(graph_path(built.parent / "kb"))
    assert len(store.nodes("Document")) == 2
    assert len(store.nodes("Learning objective")) == 5
    assert len(store.edges("ALIGNS_WITH")) == 2
    assert {n.properties["standardClassification"] for n in store.nodes("Document")} == {5, 6}
    index = open_index(built.parent / "kb", VectorIndex().config)
    assert len(index) == len(store.nodes("Chunk"))


def test_ingestion_commands_are_rerunnable(built, capsys):
    before = graph_path(built.parent / "kb").read_bytes()
    for argv in (["extract-kg"], ["link"], ["embed"]):
        assert run(capsys, "--config", built, *argv)[0] == EXIT_OK
    assert graph_path(built.parent / "kb").read_bytes() == before
    code, out, _ = run(capsys, "--config", built, "link")
    assert out.startswith("0 ALIGNS_WITH links created")


def test_query_with_trace(built, capsys):
    code, out, _ = run(capsys, "--config", built, "query", WORKED_QUERY, "--trace")
    assert code == EXIT_OK
    answer, trace = out.split("--- trace ---")
    assert answer.strip()
    assert "route: INSTITUTION" in trace
    assert trace.count("\n  - ") == 3
    assert "cypher: MATCH (p:Program)-[:HAS_LEARNING_GOAL]->(l:`Learning objective`)" in trace
    for goal in FIVE_GOALS:
        assert f"l.name: {goal}" in trace


def test_query_json(built, capsys):
    code, out, _ = run(capsys, "--config", built, "query", WORKED_QUERY, "--json")
    data = json.loads(out)
    assert code == EXIT_OK and data["answer"] and len(data["expanded"]) == 3


def test_schema(built, capsys):
    code, out, _ = run(capsys, "--config", built, "schema")
    assert code == EXIT_OK
    assert "(:Program)-[:HAS_LEARNING_GOAL]->(:`Learning objective`)" in out


def test_schema_of_empty_store(tmp_path, capsys):
    assert run(capsys, "--store", tmp_path / "none", "schema")[1].strip() == "(empty graph)"


def test_query_on_empty_store_exits_zero(tmp_path, capsys):
    code, out, _ = run(capsys, "--store", tmp_path / "none", "query", "anything")
    assert code == EXIT_OK and "insufficient" in out


def test_eval_judged_prints_summary(capsys):
    code, out, _ = run(capsys, "eval", "--judged", fixture_path("judged_rows.jsonl"))
    lines = out.splitlines()
    assert code == EXIT_OK
    assert lines[1].split() == ["Mean", "0.440", "0.252", "0.778", "0.708", "0.787"]
    assert lines[2].split() == ["Median", "0.429", "0.000", "1.000", "0.901", "1.000"]
    code, out, _ = run(capsys, "eval", "--judged", fixture_path("judged_rows.jsonl"), "--format", "json")
    assert json.loads(out)["summary"]["median"]["context_recall"] == 0.901


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run(capsys, "bogus")[0] == EXIT_USAGE
    assert run(capsys, "--config", tmp_path / "missing.toml", "schema")[0] == EXIT_USAGE
    assert run(capsys, "eval")[0] == EXIT_USAGE
    code, _, err = run(capsys, "--store", tmp_path, "extract-kg", "--doc", "nope")
    assert code == EXIT_USAGE and "nope" in err
    assert run(capsys, "ingest", tmp_path / "missing.json")[0] == EXIT_USAGE


def test_runtime_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    code, _, err = run(capsys, "eval", "--judged", bad)
    assert code == EXIT_RUNTIME and err.startswith("error:")
    kb = tmp_path / "kb"
    kb.mkdir()
    graph_path(kb).write_text("garbage\n")
    assert run(capsys, "--store", kb, "schema")[0] == EXIT_RUNTIME


def test_writer_lock_is_exclusive(tmp_path, capsys):
    with writer_lock(tmp_path):
        with pytest.raises(StoreBusyError):
            with writer_lock(tmp_path):
                pass
        assert run(capsys, "--store", tmp_path, "link")[0] == EXIT_RUNTIME


# -- config --------------------------------------------------------------------


def test_config_rejects_key_in_file(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[provider]\napi_key = "sk-123"\n')
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_values_and_relative_paths(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('store_path = "kb"\n[index]\nbackend = "hnsw"\nk = 3\n[eval]\nweight = 0.5\n'
                    '[chunking]\nstrategy = "sentence"\nchunk_tokens = 50\noverlap_tokens = 0\n')
    cfg = load_config(path)
    assert cfg.store_path == tmp_path / "kb"
    assert cfg.index.backend == "hnsw" and cfg.index.k == 3
    assert cfg.eval_weight == 0.5 and cfg.chunking.strategy == "sentence"
    assert load_config(path, "/elsewhere").store_path.as_posix() == "/elsewhere"


@pytest.mark.parametrize("body", ['[provider]\nkind = "other"\n', "[eval]\nweight = 2\n", "[chunking]\noverlap_tokens = 500\n",
                                  "store_path = [\n"])
def test_config_errors(tmp_path, body):
    path = tmp_path / "c.toml"
    path.write_text(body)
    with pytest.raises(ConfigError):
        load_config(path)


# -- HTTP service ----------------------------------------------------------------


@pytest.fixture
def service(built):
    cfg = load_config(built)
    store = GraphStore.load(graph_path(cfg.store_path))
    pipeline = Pipeline(store, open_index(cfg.store_path, cfg.index), cfg.make_provider(), cfg.pipeline)
    server = make_server(pipeline, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def test_service_health_and_query(service):
    with httpx.Client(base_url=service) as client:
        health = client.get("/health")
        assert health.status_code == 200 and health.json() == {"status": "ok"}
        assert health.headers["content-type"] == "application/json"
        resp = client.post("/query", json={"question": WORKED_QUERY})
        assert resp.status_code == 200
        data = resp.json()
        assert set(data) == {"answer", "route", "expanded", "contexts"}
        assert data["route"] == "INSTITUTION" and len(data["expanded"]) == 3
        assert any("Global Understanding" in c for c in data["contexts"])


def test_service_concurrent_queries(service):
    results = []

    def ask():
        with httpx.Client(base_url=service) as client:
            results.append(client.post("/query", json={"question": WORKED_QUERY}).json()["answer"])

    threads = [threading.Thread(target=ask) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(results) == 4 and len(set(results)) == 1


def test_service_rejects_bad_requests(service):
    with httpx.Client(base_url=service) as client:
        assert client.post("/query", content=b"question", headers={"Content-Type": "text/plain"}).status_code == 415
        assert client.post("/query", content=b"{bad", headers={"Content-Type": "application/json"}).status_code == 400
        assert client.post("/query", json={"question": "  "}).status_code == 400
        assert client.post("/query", json={"q": "x"}).status_code == 400
        assert client.get("/nope").status_code == 404
