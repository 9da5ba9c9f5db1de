"""Model-driven knowledge-graph extraction from institutional documents.

The model is asked to call the ``extract_knowledge_graph`` tool with a
payload shaped like ``EXTRACTION_SCHEMA``. The payload is validated into a
``GraphDocument``, entity ids are case-folded together, and the result is
merged into the store under the Document node it came from.
"""
from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .graphstore import EdgeRecord, GraphStore, NodeRecord
from .graphstore.store import GraphStoreError, validate_property_value
from .ingest.hierarchy import INSTITUTION, chunk_texts
from .prompts import EXTRACTION, allowed_line
from .provider import ChatMessage, Provider, Task, ToolSpec

logger = logging.getLogger(__name__)

REQUIRED_PROPERTY = "parentDocUUID"
MENTIONS = "MENTIONS"
EXTRACTION_TOOL = "extract_knowledge_graph"

EXTRACTION_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    "label": {"type": "string"},
                    "properties": {"type": "object"},
                },
                "required": ["id", "label"],
            },
        },
        "relationships": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "source": {"type": "string"},
                    "target": {"type": "string"},
                    "type": {"type": "string"},
                },
                "required": ["source", "target", "type"],
            },
        },
    },
    "required": ["nodes", "relationships"],
}

EXTRACTION_TOOL_SPEC = ToolSpec(
    EXTRACTION_TOOL, "Record the entities and relationships found in the text.", EXTRACTION_SCHEMA
)

_INTEGER_RE = re.compile(r"^[+-]?\d+$")
_SNAKE_RE = re.compile(r"_+([a-zA-Z0-9])")


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str


@dataclass
class ExtractionPolicy:
    allowed_node_labels: list[str] | None = None
    allowed_rel_types: list[str] | None = None
    required_property_key: str = REQUIRED_PROPERTY


@dataclass
class ExtractedNode:
    id: str
    label: str
    properties: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExtractedRelationship:
    source_id: str
    target_id: str
    rel_type: str


@dataclass
class GraphDocument:
    nodes: list[ExtractedNode]
    relationships: list[ExtractedRelationship]
    parent_document_id: str
    diagnostics: list[Diagnostic] = field(default_factory=list)


@dataclass
class MergeReport:
    nodes_created: int = 0
    nodes_merged: int = 0
    relationships_created: int = 0
    relationships_existing: int = 0
    mentions_created: int = 0

    def add(self, other: "MergeReport") -> None:
        for name in vars(self):
            setattr(self, name, getattr(self, name) + getattr(other, name))


def _diag(out: list[Diagnostic], code: str, message: str) -> None:
    out.append(Diagnostic(code, message))
    logger.warning("extraction %s: %s", code, message, extra={"diagnostic": code})


def build_extraction_prompt(policy: ExtractionPolicy, parent_doc_uuid: str) -> str:
    if not parent_doc_uuid:
        raise ValueError("parent_doc_uuid must not be empty")
    return EXTRACTION.format(
        labels_line=allowed_line("Allowed Node Labels", policy.allowed_node_labels),
        rels_line=allowed_line("Allowed Relationship Types", policy.allowed_rel_types),
        parent_doc_uuid=parent_doc_uuid,
    )


def camel_case(key: str) -> str:
    key = key.strip("_")
    return _SNAKE_RE.sub(lambda m: m.group(1).upper(), key)


def rel_type_name(raw: str) -> str:
    """``works at`` / ``worksAt`` -> ``WORKS_AT``."""
    spaced = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", raw.strip())
    name = re.sub(r"[^A-Za-z0-9]+", "_", spaced).strip("_").upper()
    if not name or not name[0].isalpha():
        name = "REL_" + name
    return name


def _clean_properties(raw: Any, node_id: str, diags: list[Diagnostic]) -> dict[str, Any]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        _diag(diags, "bad-properties", f"node {node_id!r}: properties is not an object")
        return {}
    props: dict[str, Any] = {}
    for key, value in raw.items():
        key = str(key)
        if " " in key.strip():
            _diag(diags, "property-key-space", f"node {node_id!r}: dropped key {key!r}")
            continue
        key = camel_case(key.strip())
        if not key:
            continue
        try:
            validate_property_value(key, value)
        except GraphStoreError:
            if isinstance(value, (list, dict)) or value is None:
                _diag(diags, "property-value", f"node {node_id!r}: dropped {key!r} with unsupported value")
                continue
            value = str(value)
        props[key] = value
    return props


def parse_extraction(model_output: str | dict[str, Any], policy: ExtractionPolicy,
                     parent_doc_uuid: str) -> GraphDocument:
    """Validate a tool-call payload into a GraphDocument.

    Nodes with integer ids, missing ids/labels or labels outside the policy
    are dropped one by one; so are relationships that fail the policy or
    reference a node that is not present. The required property is injected
    (or overwritten) so every node carries ``parent_doc_uuid``.

    Raises:
        ExtractionError: the payload is not JSON of the expected shape, or
            no node survives validation.
    """
    if isinstance(model_output, str):
        try:
            data = json.loads(model_output)
        except ValueError as exc:
            raise ExtractionError(f"extraction output is not JSON: {exc}") from None
    else:
        data = model_output
    if not isinstance(data, dict) or not isinstance(data.get("nodes", []), list):
        raise ExtractionError("extraction output must be an object with a 'nodes' list")
    diags: list[Diagnostic] = []
    allowed = {l.casefold(): l for l in policy.allowed_node_labels} if policy.allowed_node_labels else None
    allowed_rels = {rel_type_name(r) for r in policy.allowed_rel_types} if policy.allowed_rel_types else None
    key = policy.required_property_key

    nodes: list[ExtractedNode] = []
    for raw in data.get("nodes", []):
        if not isinstance(raw, dict):
            _diag(diags, "bad-node", f"node entry {raw!r} is not an object")
            continue
        node_id, label = raw.get("id"), raw.get("label", raw.get("type"))
        if isinstance(node_id, bool) or node_id is None or (isinstance(node_id, str) and not node_id.strip()):
            _diag(diags, "missing-id", f"node {raw!r} has no usable id")
            continue
        if isinstance(node_id, (int, float)) or _INTEGER_RE.match(str(node_id).strip()):
            _diag(diags, "integer-id", f"node id {node_id!r} is an integer")
            continue
        node_id = str(node_id).strip()
        if not isinstance(label, str) or not label.strip():
            _diag(diags, "missing-label", f"node {node_id!r} has no label")
            continue
        label = label.strip()
        if allowed is not None:
            if label.casefold() not in allowed:
                _diag(diags, "label-not-allowed", f"node {node_id!r} label {label!r} not in policy")
                continue
            label = allowed[label.casefold()]
        props = _clean_properties(raw.get("properties"), node_id, diags)
        if props.get(key) != parent_doc_uuid:
            code = "parent-missing" if key not in props else "parent-overwritten"
            _diag(diags, code, f"node {node_id!r}: {key} set to {parent_doc_uuid!r}")
            props[key] = parent_doc_uuid
        nodes.append(ExtractedNode(node_id, label, props))
    if not nodes:
        raise ExtractionError("no valid nodes in extraction output")

    present = {n.id.casefold() for n in nodes}
    rels: list[ExtractedRelationship] = []
    for raw in data.get("relationships", []) or []:
        if not isinstance(raw, dict):
            _diag(diags, "bad-relationship", f"relationship entry {raw!r} is not an object")
            continue
        src, dst, rtype = raw.get("source"), raw.get("target"), raw.get("type")
        # some models nest the endpoint as {"id": ..., "label": ...}
        src = src.get("id") if isinstance(src, dict) else src
        dst = dst.get("id") if isinstance(dst, dict) else dst
        if src is None or dst is None or not rtype:
            _diag(diags, "bad-relationship", f"relationship {raw!r} lacks source/target/type")
            continue
        src, dst, rtype = str(src).strip(), str(dst).strip(), rel_type_name(str(rtype))
        if allowed_rels is not None and rtype not in allowed_rels:
            _diag(diags, "rel-not-allowed", f"relationship type {rtype!r} not in policy")
            continue
        if src.casefold() not in present or dst.casefold() not in present:
            _diag(diags, "dangling", f"relationship {src!r}-[{rtype}]->{dst!r} references a missing node")
            continue
        rels.append(ExtractedRelationship(src, dst, rtype))
    return GraphDocument(nodes, rels, parent_doc_uuid, diags)


def normalize_entities(gd: GraphDocument) -> GraphDocument:
    """Merge nodes whose ids are equal ignoring case.

    The first-seen node keeps its id casing and label; later duplicates only
    add properties it lacks. Relationships are re-pointed to survivors and
    deduplicated; those whose endpoints vanished are dropped.
    """
    diags = list(gd.diagnostics)
    survivors: dict[str, ExtractedNode] = {}
    for node in gd.nodes:
        folded = node.id.casefold()
        if folded not in survivors:
            survivors[folded] = ExtractedNode(node.id, node.label, dict(node.properties))
            continue
        keep = survivors[folded]
        if node.label != keep.label:
            _diag(diags, "label-conflict", f"{node.id!r} labelled {node.label!r}, keeping {keep.label!r}")
        for k, v in node.properties.items():
            keep.properties.setdefault(k, v)
    rels: list[ExtractedRelationship] = []
    seen: set[tuple[str, str, str]] = set()
    for rel in gd.relationships:
        src, dst = survivors.get(rel.source_id.casefold()), survivors.get(rel.target_id.casefold())
        if src is None or dst is None:
            _diag(diags, "dangling", f"dropped {rel.source_id!r}-[{rel.rel_type}]->{rel.target_id!r}")
            continue
        triple = (src.id, dst.id, rel.rel_type)
        if triple not in seen:
            seen.add(triple)
            rels.append(ExtractedRelationship(*triple))
    return GraphDocument(list(survivors.values()), rels, gd.parent_document_id, diags)


def entity_node_id(label: str, entity_id: str) -> str:
    return f"entity:{label}:{entity_id.casefold()}"


def merge_into_store(store: GraphStore, gd: GraphDocument, document_node_id: str) -> MergeReport:
    """Upsert extracted nodes and relationships and link them from the document.

    Existing entity nodes only gain properties they do not already have, so
    merging the same GraphDocument again changes nothing.
    """
    if not store.has_node(document_node_id):
        raise GraphStoreError(f"document node {document_node_id!r} not found")
    report = MergeReport()
    ids: dict[str, str] = {}
    for node in gd.nodes:
        nid = entity_node_id(node.label, node.id)
        ids[node.id.casefold()] = nid
        props = dict(node.properties)
        props.setdefault("name", node.id)
        props["nodeCat"] = INSTITUTION
        if store.has_node(nid):
            existing = store.get_node(nid).properties
            missing = {k: v for k, v in props.items() if k not in existing}
            if missing:
                store.upsert_node(NodeRecord(nid, [node.label], missing))
            report.nodes_merged += 1
        else:
            store.upsert_node(NodeRecord(nid, [node.label], props))
            report.nodes_created += 1
        if store.find_edge(document_node_id, MENTIONS, nid) is None:
            store.upsert_edge(EdgeRecord(MENTIONS, document_node_id, nid))
            report.mentions_created += 1
    for rel in gd.relationships:
        src, dst = ids.get(rel.source_id.casefold()), ids.get(rel.target_id.casefold())
        if src is None or dst is None:
            continue
        if store.find_edge(src, rel.rel_type, dst) is None:
            store.upsert_edge(EdgeRecord(rel.rel_type, src, dst))
            report.relationships_created += 1
        else:
            report.relationships_existing += 1
    return report


def extract_chunk(provider: Provider, text: str, policy: ExtractionPolicy, parent_doc_uuid: str) -> GraphDocument:
    req = provider.request(
        Task.EXTRACT,
        [ChatMessage("system", build_extraction_prompt(policy, parent_doc_uuid)), ChatMessage("user", text)],
        tools=[EXTRACTION_TOOL_SPEC],
    )
    call = provider.call_tool(req)
    return parse_extraction(call.arguments, policy, parent_doc_uuid)


def extract_document(provider: Provider, store: GraphStore, document_node_id: str,
                     policy: ExtractionPolicy | None = None, max_workers: int = 4) -> tuple[GraphDocument, MergeReport]:
    """Extract every chunk of a document, fuse the results and merge them once.

    Chunks whose output has no valid node are skipped with a warning.
    """
    policy = policy or ExtractionPolicy()
    doc = store.get_node(document_node_id)
    doc_uuid = str(doc.properties.get("docUUID", document_node_id))
    texts = [t for _, t in chunk_texts(store, document_node_id)]

    def run(text: str) -> GraphDocument | None:
        try:
            return extract_chunk(provider, text, policy, doc_uuid)
        except ExtractionError as exc:
            logger.warning("%s: chunk skipped: %s", document_node_id, exc)
            return None

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        parts = [gd for gd in pool.map(run, texts) if gd is not None]
    combined = GraphDocument(
        [n for gd in parts for n in gd.nodes],
        [r for gd in parts for r in gd.relationships],
        doc_uuid,
        [d for gd in parts for d in gd.diagnostics],
    )
    fused = normalize_entities(combined)
    return fused, merge_into_store(store, fused, document_node_id)
