"""Construction of the two document hierarchies in the graph store.

AACSB side::

    (AACSB)-[:HAS_SECTION]->(Section)-[:HAS_STANDARD]->(Standard)
        -[:HAS_COMPONENT]->(Formal|Definitions|Basis|Documentation)
        -[:HAS_CHUNK]->(Chunk)      plus FIRST_CHUNK to the head and
                                     NEXT between consecutive chunks

Institution side::

    (Institution)-[:HAS_DOCSOURCE]->(Docsource)-[:HAS_DOCUMENT]->(Document)
        -[:HAS_CHUNK]->(Chunk)      Documents of one import and the chunks of
                                     one document are NEXT-linked in order
"""
from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from ..graphstore import EdgeRecord, GraphStore, NodeRecord
from ..graphstore.store import GraphStoreError, validate_property_value
from .standards import SectionRecord, StandardRecord
from .text import Chunk, ChunkingConfig, chunk, preprocess

AACSB, INSTITUTION = "AACSB", "INSTITUTION"

HAS_SECTION = "HAS_SECTION"
HAS_STANDARD = "HAS_STANDARD"
HAS_COMPONENT = "HAS_COMPONENT"
HAS_CHUNK = "HAS_CHUNK"
FIRST_CHUNK = "FIRST_CHUNK"
NEXT = "NEXT"
HAS_DOCSOURCE = "HAS_DOCSOURCE"
HAS_DOCUMENT = "HAS_DOCUMENT"

AACSB_ROOT_ID = "aacsb:root"
INSTITUTION_ROOT_ID = "institution:root"

# component kind -> node label
COMPONENTS = {
    "formal": "Formal",
    "definitions": "Definitions",
    "basis": "Basis",
    "documentation": "Documentation",
}


class HierarchyError(GraphStoreError):
    pass


class DuplicateDocumentError(HierarchyError):
    pass


def section_id(num: int) -> str:
    return f"aacsb:section:{num}"


def standard_id(num: int) -> str:
    return f"aacsb:standard:{num}"


def component_id(num: int, kind: str) -> str:
    return f"aacsb:standard:{num}:{kind}"


def document_id(doc_uuid: str) -> str:
    return f"institution:document:{doc_uuid}"


@dataclass
class HierarchyReport:
    """Counts of nodes/edges touched by each build phase."""

    phases: dict[str, dict[str, int]] = field(default_factory=dict)

    def bump(self, phase: str, key: str, n: int = 1) -> None:
        self.phases.setdefault(phase, {}).setdefault(key, 0)
        self.phases[phase][key] += n


def _link_chunks(store: GraphStore, parent_id: str, chunks: Iterable[Chunk]) -> int:
    ordered = sorted(chunks, key=lambda c: c.seq_index)
    if [c.seq_index for c in ordered] != list(range(len(ordered))):
        raise HierarchyError(f"{parent_id}: chunk seqIndex values are not dense from 0")
    edges = 0
    for c in ordered:
        store.upsert_edge(EdgeRecord(HAS_CHUNK, parent_id, c.chunk_id))
        edges += 1
    if ordered:
        store.upsert_edge(EdgeRecord(FIRST_CHUNK, parent_id, ordered[0].chunk_id))
    for a, b in zip(ordered, ordered[1:]):
        store.upsert_edge(EdgeRecord(NEXT, a.chunk_id, b.chunk_id))
        edges += 1
    return edges


def _chunk_node(c: Chunk, category: str, extra: dict[str, Any]) -> NodeRecord:
    props = {"text": c.text, "seqIndex": c.seq_index, "parentId": c.parent_id, "nodeCat": category}
    props.update(extra)
    for key, value in c.metadata.items():
        try:
            validate_property_value(key, value)
        except GraphStoreError:
            continue
        props.setdefault(key, value)
    return NodeRecord(c.chunk_id, ["Chunk"], props)


def build_standard_hierarchy(
    store: GraphStore,
    sections: list[SectionRecord],
    standards: list[StandardRecord],
    config: ChunkingConfig | None = None,
) -> HierarchyReport:
    """Create the AACSB tree in four phases.

    1. root, Section and Standard nodes (with their tree edges);
    2. component nodes and their Chunk nodes;
    3. chunk ordering (FIRST_CHUNK/NEXT) and HAS_CHUNK parent links;
    4. component -> Standard links.

    Re-running with the same records leaves the store unchanged.
    """
    config = config or ChunkingConfig()
    report = HierarchyReport()
    cat = {"nodeCat": AACSB}

    store.upsert_node(NodeRecord(AACSB_ROOT_ID, ["AACSB"], {"name": "AACSB", **cat}))
    for s in sections:
        store.upsert_node(NodeRecord(section_id(s.sectionNum), ["Section"], {
            "sectionNum": s.sectionNum, "sectionTitle": s.sectionTitle,
            "sectionDescription": s.sectionDescription, **cat,
        }))
        store.upsert_edge(EdgeRecord(HAS_SECTION, AACSB_ROOT_ID, section_id(s.sectionNum)))
        report.bump("phase1", "sections")
    for std in standards:
        if not store.has_node(section_id(std.section)):
            raise HierarchyError(f"standard {std.standardNum}: section {std.section} missing")
        store.upsert_node(NodeRecord(standard_id(std.standardNum), ["Standard"], {
            "standardNum": std.standardNum, "standardTitle": std.standardTitle,
            "section": std.section, **cat,
        }))
        store.upsert_edge(EdgeRecord(HAS_STANDARD, section_id(std.section), standard_id(std.standardNum)))
        report.bump("phase1", "standards")

    pending: list[tuple[str, list[Chunk]]] = []
    for std in standards:
        for kind, label in COMPONENTS.items():
            cid = component_id(std.standardNum, kind)
            text = std.component_text(kind)
            store.upsert_node(NodeRecord(cid, [label], {
                "parentStandardNum": std.standardNum, "componentType": kind, "text": text, **cat,
            }))
            report.bump("phase2", "components")
            source = f"AACSB Standard {std.standardNum} {label}"
            chunks = chunk(text, config, parent_id=cid)
            for c in chunks:
                store.upsert_node(_chunk_node(c, AACSB, {
                    "standardNum": std.standardNum, "componentType": kind, "source": source,
                }))
            report.bump("phase2", "chunks", len(chunks))
            pending.append((cid, chunks))

    for cid, chunks in pending:
        report.bump("phase3", "edges", _link_chunks(store, cid, chunks))

    for std in standards:
        for kind in COMPONENTS:
            store.upsert_edge(EdgeRecord(HAS_COMPONENT, standard_id(std.standardNum), component_id(std.standardNum, kind)))
            report.bump("phase4", "edges")
    return report


# -- institution side ----------------------------------------------------------


@dataclass
class RawDocument:
    """One institutional document as submitted for ingest.

    JSON form: ``{"docUUID"?, "sourcePath", "text", "metadata": {}}``; a
    missing docUUID gets a fresh UUIDv4.
    """

    source_path: str
    text: str
    doc_uuid: str = field(default_factory=lambda: str(uuid.uuid4()))
    import_date: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "RawDocument":
        if "sourcePath" not in data or "text" not in data:
            raise ValueError("document JSON needs 'sourcePath' and 'text'")
        kwargs: dict[str, Any] = {
            "source_path": str(data["sourcePath"]),
            "text": str(data["text"]),
            "metadata": dict(data.get("metadata") or {}),
        }
        if data.get("docUUID"):
            kwargs["doc_uuid"] = str(data["docUUID"])
        if data.get("importDate"):
            kwargs["import_date"] = str(data["importDate"])
        return cls(**kwargs)


def load_documents(path: str | os.PathLike[str]) -> list[RawDocument]:
    """Read a document-ingest JSON file holding one object or a list of them."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    items = data if isinstance(data, list) else [data]
    return [RawDocument.from_json(item) for item in items]


def create_docsource(store: GraphStore, source_path: str, import_date: str | None = None,
                     import_id: str | None = None) -> str:
    """Create the Institution root (if needed) and one Docsource node for an import."""
    import_id = import_id or str(uuid.uuid4())
    import_date = import_date or datetime.now(timezone.utc).isoformat()
    store.upsert_node(NodeRecord(INSTITUTION_ROOT_ID, ["Institution"], {"name": "Institution", "nodeCat": INSTITUTION}))
    ds_id = f"institution:docsource:{import_id}"
    store.upsert_node(NodeRecord(ds_id, ["Docsource"], {
        "importId": import_id, "importDate": import_date, "sourcePath": source_path, "nodeCat": INSTITUTION,
    }))
    store.upsert_edge(EdgeRecord(HAS_DOCSOURCE, INSTITUTION_ROOT_ID, ds_id))
    return ds_id


def build_document_hierarchy(store: GraphStore, docsource_id: str, raw: RawDocument,
                             chunks: list[Chunk]) -> str:
    """Attach one document and its chunks under ``docsource_id``.

    The document is appended to the Docsource's NEXT-linked document list.
    ``chunks`` may arrive in any order; they are linked by ``seq_index``.

    Raises:
        DuplicateDocumentError: if the docUUID is already in the store.
    """
    doc_id = document_id(raw.doc_uuid)
    if store.has_node(doc_id):
        raise DuplicateDocumentError(f"document {raw.doc_uuid} already ingested")
    if not store.has_node(docsource_id):
        raise HierarchyError(f"unknown docsource {docsource_id!r}")
    siblings = store.out_edges(docsource_id, HAS_DOCUMENT)
    file_name = os.path.basename(raw.source_path)
    props: dict[str, Any] = {
        "docUUID": raw.doc_uuid,
        "sourcePath": raw.source_path,
        "fileName": file_name,
        "importDate": raw.import_date,
        "modelSummary": "",
        "seqIndex": len(siblings),
        "nodeCat": INSTITUTION,
    }
    for key, value in raw.metadata.items():
        try:
            validate_property_value(key, value)
        except GraphStoreError:
            continue
        props.setdefault(key, value)
    store.upsert_node(NodeRecord(doc_id, ["Document"], props))
    store.upsert_edge(EdgeRecord(HAS_DOCUMENT, docsource_id, doc_id))
    if siblings:
        tail = max(siblings, key=lambda e: store.get_node(e.to_id).properties.get("seqIndex", 0))
        store.upsert_edge(EdgeRecord(NEXT, tail.to_id, doc_id))
    for c in chunks:
        store.upsert_node(_chunk_node(c, INSTITUTION, {
            "docUUID": raw.doc_uuid, "fileName": file_name, "source": file_name,
        }))
    _link_chunks(store, doc_id, chunks)
    return doc_id


def ingest_documents(store: GraphStore, documents: list[RawDocument],
                     config: ChunkingConfig | None = None, source_path: str | None = None,
                     import_date: str | None = None) -> tuple[str, list[str]]:
    """Preprocess, chunk and attach ``documents`` as one import.

    Returns (docsource id, document node ids). Duplicate docUUIDs are
    rejected before anything is written.
    """
    config = config or ChunkingConfig()
    seen: set[str] = set()
    for raw in documents:
        if raw.doc_uuid in seen or store.has_node(document_id(raw.doc_uuid)):
            raise DuplicateDocumentError(f"document {raw.doc_uuid} already ingested")
        seen.add(raw.doc_uuid)
    if source_path is None:
        paths = [os.path.abspath(d.source_path) for d in documents] or ["."]
        source_path = os.path.commonpath(paths) if len(paths) > 1 else paths[0]
    ds_id = create_docsource(store, source_path, import_date)
    doc_ids = []
    for raw in documents:
        parent = document_id(raw.doc_uuid)
        meta = {"fileName": os.path.basename(raw.source_path), "importDate": raw.import_date}
        meta.update({k: v for k, v in raw.metadata.items() if k in ("pageNumber", "page", "timestamp")})
        chunks = chunk(preprocess(raw.text), config, parent_id=parent, metadata=meta)
        doc_ids.append(build_document_hierarchy(store, ds_id, raw, chunks))
    return ds_id, doc_ids


def chunk_texts(store: GraphStore, parent_id: str) -> list[tuple[str, str]]:
    """(chunk id, text) pairs under ``parent_id`` in NEXT-chain order."""
    heads = store.out_edges(parent_id, FIRST_CHUNK)
    if not heads:
        return []
    return [(cid, store.get_node(cid).properties.get("text", "")) for cid in store.walk_chain(heads[0].to_id, NEXT)]
