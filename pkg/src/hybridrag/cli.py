"""``hybridrag`` command line.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from .classifylink import classify_document, link_documents, summarize_document
from .config import AppConfig, ConfigError, load_config
from .eval import evaluate_judged, judge_samples, load_judged, load_samples, report_json_text
from .graphstore import GraphStore
from .ingest import (
    build_standard_hierarchy,
    import_standards,
    ingest_documents,
    load_documents,
)
from .ingest.hierarchy import document_id
from .kgextract import ExtractionPolicy, extract_document
from .pipeline import AnswerTrace, Pipeline
from .workspace import STANDARDS_FILE, open_index, open_store, save_store, writer_lock

logger = logging.getLogger("hybridrag")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("hybridrag.data").joinpath("fixtures", name)))


def _documents(store: GraphStore, doc_uuid: str | None) -> list[str]:
    if doc_uuid is None:
        return [n.node_id for n in store.nodes("Document")]
    node_id = document_id(doc_uuid)
    if not store.has_node(node_id):
        raise UsageError(f"no document with docUUID {doc_uuid}")
    return [node_id]


def cmd_import_standards(cfg: AppConfig, args: argparse.Namespace) -> int:
    sections_csv = Path(args.sections) if args.sections else fixture_path("sections.csv")
    standards_csv = Path(args.standards) if args.standards else fixture_path("standards.csv")
    with writer_lock(cfg.store_path):
        store = open_store(cfg.store_path)
        sections, standards = import_standards(sections_csv, standards_csv, cfg.store_path / STANDARDS_FILE)
        build_standard_hierarchy(store, sections, standards, cfg.chunking)
        save_store(store, cfg.store_path)
    print(f"{len(standards)} standards, {len(sections)} sections imported")
    return EXIT_OK


def cmd_ingest(cfg: AppConfig, args: argparse.Namespace) -> int:
    docs = [d for path in args.files for d in load_documents(path)]
    with writer_lock(cfg.store_path):
        store = open_store(cfg.store_path)
        ds_id, doc_ids = ingest_documents(store, docs, cfg.chunking)
        save_store(store, cfg.store_path)
    chunks = sum(len(store.out_edges(d, "HAS_CHUNK")) for d in doc_ids)
    print(f"{len(doc_ids)} documents, {chunks} chunks ingested under {ds_id}")
    return EXIT_OK


def cmd_extract_kg(cfg: AppConfig, args: argparse.Namespace) -> int:
    provider = cfg.make_provider()
    policy = ExtractionPolicy(cfg.allowed_node_labels, cfg.allowed_rel_types)
    with writer_lock(cfg.store_path):
        store = open_store(cfg.store_path)
        for doc_id in _documents(store, args.doc):
            gd, report = extract_document(provider, store, doc_id, policy)
            print(f"{doc_id}: {report.nodes_created} nodes created, {report.nodes_merged} merged, "
                  f"{report.relationships_created} relationships, {len(gd.diagnostics)} diagnostics")
        save_store(store, cfg.store_path)
    return EXIT_OK


def cmd_summarize_classify(cfg: AppConfig, args: argparse.Namespace) -> int:
    provider = cfg.make_provider()
    with writer_lock(cfg.store_path):
        store = open_store(cfg.store_path)
        for doc_id in _documents(store, args.doc):
            summarize_document(store, provider, doc_id, cfg.summary)
            result = classify_document(store, provider, doc_id)
            if result is None:
                print(f"{doc_id}: skipped (empty document)", file=sys.stderr)
                continue
            if result.warning:
                print(f"warning: {doc_id}: no standard number in reply {result.raw_model_output!r}; set to 0",
                      file=sys.stderr)
            print(f"{doc_id}: standard {result.standard_classification} ({result.extracted_via})")
        save_store(store, cfg.store_path)
    return EXIT_OK


def cmd_link(cfg: AppConfig, args: argparse.Namespace) -> int:
    with writer_lock(cfg.store_path):
        store = open_store(cfg.store_path)
        created = link_documents(store)
        save_store(store, cfg.store_path)
    print(f"{created} ALIGNS_WITH links created, {len(store.edges('ALIGNS_WITH'))} in total")
    return EXIT_OK


def cmd_embed(cfg: AppConfig, args: argparse.Namespace) -> int:
    provider = cfg.make_provider()
    with writer_lock(cfg.store_path):
        store = open_store(cfg.store_path)
        index = open_index(cfg.store_path, cfg.index)
        pending = [n for n in store.nodes("Chunk") if n.node_id not in index]
        for start in range(0, len(pending), args.batch):
            batch = pending[start : start + args.batch]
            vectors = provider.embed([str(n.properties.get("text") or " ") for n in batch])
            for node, vec in zip(batch, vectors):
                index.add(node.node_id, vec)
        index.save(cfg.store_path)
    print(f"{len(pending)} chunks embedded, {len(index)} in {index.name}")
    return EXIT_OK


def _pipeline(cfg: AppConfig) -> Pipeline:
    store = open_store(cfg.store_path)
    return Pipeline(store, open_index(cfg.store_path, cfg.index), cfg.make_provider(), cfg.pipeline)


def _print_trace(trace: AnswerTrace, as_json: bool) -> None:
    if as_json:
        print(json.dumps(trace.to_json(), indent=2))
        return
    print("--- trace ---")
    print(f"route: {trace.route.route.value} ({trace.route.tool_name})")
    print("expanded queries:")
    for q in trace.expanded.expanded:
        print(f"  - {q}")
    for w in trace.expanded.warnings:
        print(f"  warning: {w}")
    print(f"cypher: {trace.context.cypher if trace.context.cypher is not None else '(none)'}")
    for i, hits in enumerate(trace.context.per_query_hits, start=1):
        print(f"query {i} hits: " + ", ".join(f"{h.chunk_id} ({h.score:.4f})" for h in hits))
    print("context:")
    print(trace.context.context_string or "(empty)")


def cmd_query(cfg: AppConfig, args: argparse.Namespace) -> int:
    trace = _pipeline(cfg).answer(args.question)
    if args.json:
        print(json.dumps(trace.to_json(), indent=2))
        return EXIT_OK
    print(trace.answer)
    if args.trace:
        _print_trace(trace, False)
    return EXIT_OK


def cmd_repl(cfg: AppConfig, args: argparse.Namespace) -> int:
    pipeline = _pipeline(cfg)
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line or line.strip() in ("exit", "quit"):
            return EXIT_OK
        if not line.strip():
            continue
        trace = pipeline.answer(line.strip())
        print(trace.answer)
        if args.trace:
            _print_trace(trace, False)


def cmd_eval(cfg: AppConfig, args: argparse.Namespace) -> int:
    if args.judged:
        items = load_judged(args.judged)
        needs_provider = any(i.embeddings is None for i in items)
        report = evaluate_judged(items, cfg.make_provider() if needs_provider else None, cfg.eval_weight)
    elif args.dataset:
        provider = cfg.make_provider()
        report = evaluate_judged(judge_samples(load_samples(args.dataset), provider), provider, cfg.eval_weight)
    else:
        raise UsageError("eval needs --dataset or --judged")
    print(report_json_text(report) if args.format == "json" else report.to_text())
    return EXIT_OK


def cmd_schema(cfg: AppConfig, args: argparse.Namespace) -> int:
    schema = open_store(cfg.store_path).derive_schema()
    print(schema.to_text() if not schema.is_empty() else "(empty graph)")
    return EXIT_OK


def cmd_serve(cfg: AppConfig, args: argparse.Namespace) -> int:
    from .service import make_server

    server = make_server(_pipeline(cfg), args.host, args.port)
    print(f"serving on http://{args.host}:{server.server_address[1]}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridrag", description="Hybrid knowledge-graph and vector RAG over accreditation material.")
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--store", help="store directory (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("import-standards", help="import the standards CSVs and build the AACSB hierarchy")
    p.add_argument("--sections", help="sections CSV (default: bundled fixture)")
    p.add_argument("--standards", help="standards CSV (default: bundled fixture)")
    p.set_defaults(func=cmd_import_standards)

    p = sub.add_parser("ingest", help="chunk documents and attach them to the institution hierarchy")
    p.add_argument("files", nargs="+", help="document JSON files")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract-kg", help="extract knowledge-graph entities from documents")
    p.add_argument("--doc", help="docUUID of a single document")
    p.set_defaults(func=cmd_extract_kg)

    p = sub.add_parser("summarize-classify", help="summarise documents and classify them to a standard")
    p.add_argument("--doc", help="docUUID of a single document")
    p.set_defaults(func=cmd_summarize_classify)

    p = sub.add_parser("link", help="link classified documents to their standard")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("embed", help="embed every chunk not yet in the vector index")
    p.add_argument("--batch", type=int, default=64)
    p.set_defaults(func=cmd_embed)

    for name, func in (("query", cmd_query), ("repl", cmd_repl)):
        p = sub.add_parser(name, help="answer a question" if name == "query" else "interactive questions from stdin")
        if name == "query":
            p.add_argument("question")
            p.add_argument("--json", action="store_true", help="print the full trace as JSON")
        p.add_argument("--trace", action="store_true", help="print route, expansions, cypher and context")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="score an evaluation set")
    p.add_argument("--dataset", help="JSONL of samples to judge with the provider")
    p.add_argument("--judged", help="JSONL of samples with judge outputs")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("schema", help="print the graph schema")
    p.set_defaults(func=cmd_schema)

    p = sub.add_parser("serve", help="serve POST /query and GET /health")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.store)
        return args.func(cfg, args)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        logger.debug("command failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
