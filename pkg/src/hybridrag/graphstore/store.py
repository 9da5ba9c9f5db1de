"""Embedded property-graph store.

Nodes and edges live in memory behind a single writer lock, with secondary
indexes (label -> node ids, node id -> incident edges, edge triple -> edge
id). Persistence is a line-delimited JSON snapshot; see ``snapshot``.
"""
from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

SNAPSHOT_FORMAT = "hybridrag-graph"
SNAPSHOT_VERSION = 1

NODE_CATEGORIES = ("AACSB", "INSTITUTION")

_REL_TYPE_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")


class GraphStoreError(Exception):
    """Base class for store failures."""


class InvalidPropertyError(GraphStoreError):
    pass


class InvalidRecordError(GraphStoreError):
    pass


class DanglingEndpointError(GraphStoreError):
    pass


class SnapshotVersionError(GraphStoreError):
    pass


class CorruptSnapshotError(GraphStoreError):
    pass


def validate_property_value(key: str, value: Any) -> None:
    """Raise InvalidPropertyError unless ``value`` is a flat property value.

    Allowed: str, int, float, bool, or a list of str. Nested maps and
    lists of anything else are rejected.
    """
    if isinstance(value, (str, bool, int)):
        return
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise InvalidPropertyError(f"property {key!r}: non-finite float")
        return
    if isinstance(value, (list, tuple)):
        if all(isinstance(v, str) for v in value):
            return
        raise InvalidPropertyError(f"property {key!r}: lists may only hold text")
    raise InvalidPropertyError(
        f"property {key!r}: unsupported value type {type(value).__name__}"
    )


def _freeze(value: Any) -> Any:
    return list(value) if isinstance(value, tuple) else value


@dataclass
class NodeRecord:
    node_id: str
    labels: list[str]
    properties: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        if not isinstance(self.node_id, str) or not self.node_id:
            raise InvalidRecordError("node id must be non-empty text")
        if not self.labels or not all(isinstance(l, str) and l for l in self.labels):
            raise InvalidRecordError(f"node {self.node_id!r}: labels must be non-empty text")
        for key, value in self.properties.items():
            validate_property_value(key, value)

    def to_json(self) -> dict[str, Any]:
        return {"id": self.node_id, "labels": list(self.labels), "properties": dict(self.properties)}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "NodeRecord":
        return cls(data["id"], list(data["labels"]), dict(data["properties"]))


@dataclass
class EdgeRecord:
    rel_type: str
    from_id: str
    to_id: str
    properties: dict[str, Any] = field(default_factory=dict)
    edge_id: str = ""

    def __post_init__(self) -> None:
        if not self.edge_id:
            self.edge_id = f"{self.from_id}-[{self.rel_type}]->{self.to_id}"

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.from_id, self.rel_type, self.to_id)

    def validate(self) -> None:
        if not isinstance(self.rel_type, str) or not _REL_TYPE_RE.match(self.rel_type):
            raise InvalidRecordError(
                f"relationship type {self.rel_type!r} must be uppercase with underscores"
            )
        for key, value in self.properties.items():
            validate_property_value(key, value)

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.edge_id,
            "type": self.rel_type,
            "from": self.from_id,
            "to": self.to_id,
            "properties": dict(self.properties),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "EdgeRecord":
        return cls(data["type"], data["from"], data["to"], dict(data["properties"]), data["id"])


@dataclass(frozen=True)
class GraphSchema:
    node_labels: dict[str, frozenset[str]]
    rel_patterns: frozenset[tuple[str, str, str]]

    def is_empty(self) -> bool:
        return not self.node_labels and not self.rel_patterns

    def to_text(self) -> str:
        """Stable text rendering used as the ``{schema}`` slot of the Cypher prompt."""
        lines = ["Node properties:"]
        for label in sorted(self.node_labels):
            keys = ", ".join(sorted(self.node_labels[label]))
            lines.append(f"{_quote_label(label)} {{{keys}}}")
        lines.append("Relationship types:")
        for src, rel, dst in sorted(self.rel_patterns):
            lines.append(f"({_quote_label(src, colon=True)})-[:{rel}]->({_quote_label(dst, colon=True)})")
        return "\n".join(lines)


def _quote_label(label: str, colon: bool = False) -> str:
    text = label if re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", label) else f"`{label}`"
    return f":{text}" if colon else text


class GraphStore:
    """In-memory property graph with a single-writer lock.

    Every public read and write takes ``self._lock``, so readers never see a
    half-applied mutation and the handle can be shared between threads.
    """

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._nodes: dict[str, NodeRecord] = {}
        self._edges: dict[str, EdgeRecord] = {}
        self._by_label: dict[str, set[str]] = {}
        self._out: dict[str, set[str]] = {}
        self._in: dict[str, set[str]] = {}
        self._by_key: dict[tuple[str, str, str], str] = {}

    # -- mutation -----------------------------------------------------------

    def upsert_node(self, record: NodeRecord) -> str:
        """Insert a node or merge properties into an existing one (new keys win)."""
        record.validate()
        with self._lock:
            existing = self._nodes.get(record.node_id)
            if existing is None:
                node = NodeRecord(
                    record.node_id,
                    list(dict.fromkeys(record.labels)),
                    {k: _freeze(v) for k, v in record.properties.items()},
                )
                self._nodes[node.node_id] = node
                self._out[node.node_id] = set()
                self._in[node.node_id] = set()
                for label in node.labels:
                    self._by_label.setdefault(label, set()).add(node.node_id)
            else:
                for label in record.labels:
                    if label not in existing.labels:
                        existing.labels.append(label)
                        self._by_label.setdefault(label, set()).add(existing.node_id)
                existing.properties.update({k: _freeze(v) for k, v in record.properties.items()})
            return record.node_id

    def set_property(self, node_id: str, key: str, value: Any) -> None:
        validate_property_value(key, value)
        with self._lock:
            if node_id not in self._nodes:
                raise GraphStoreError(f"unknown node {node_id!r}")
            self._nodes[node_id].properties[key] = _freeze(value)

    def upsert_edge(self, record: EdgeRecord) -> str:
        """Insert an edge; a duplicate (from, type, to) triple is a no-op.

        Returns the id of the stored edge, which is the pre-existing one for
        a duplicate.
        """
        record.validate()
        with self._lock:
            for endpoint in (record.from_id, record.to_id):
                if endpoint not in self._nodes:
                    raise DanglingEndpointError(
                        f"edge {record.rel_type}: endpoint {endpoint!r} does not exist"
                    )
            existing = self._by_key.get(record.key)
            if existing is not None:
                return existing
            if record.edge_id in self._edges:
                raise InvalidRecordError(f"edge id {record.edge_id!r} already used")
            edge = EdgeRecord(
                record.rel_type, record.from_id, record.to_id, dict(record.properties), record.edge_id
            )
            self._edges[edge.edge_id] = edge
            self._by_key[edge.key] = edge.edge_id
            self._out[edge.from_id].add(edge.edge_id)
            self._in[edge.to_id].add(edge.edge_id)
            return edge.edge_id

    def remove_edge(self, edge_id: str) -> None:
        with self._lock:
            edge = self._edges.pop(edge_id, None)
            if edge is None:
                return
            del self._by_key[edge.key]
            self._out[edge.from_id].discard(edge_id)
            self._in[edge.to_id].discard(edge_id)

    # -- reads --------------------------------------------------------------

    def has_node(self, node_id: str) -> bool:
        with self._lock:
            return node_id in self._nodes

    def get_node(self, node_id: str) -> NodeRecord | None:
        with self._lock:
            node = self._nodes.get(node_id)
            if node is None:
                return None
            return NodeRecord(node.node_id, list(node.labels), dict(node.properties))

    def get_edge(self, edge_id: str) -> EdgeRecord | None:
        with self._lock:
            edge = self._edges.get(edge_id)
            if edge is None:
                return None
            return EdgeRecord(edge.rel_type, edge.from_id, edge.to_id, dict(edge.properties), edge.edge_id)

    def find_edge(self, from_id: str, rel_type: str, to_id: str) -> EdgeRecord | None:
        with self._lock:
            edge_id = self._by_key.get((from_id, rel_type, to_id))
            return self.get_edge(edge_id) if edge_id else None

    @property
    def node_count(self) -> int:
        with self._lock:
            return len(self._nodes)

    @property
    def edge_count(self) -> int:
        with self._lock:
            return len(self._edges)

    def nodes(self, label: str | None = None) -> list[NodeRecord]:
        """Copies of all nodes (optionally with ``label``), sorted by id."""
        with self._lock:
            ids = self._nodes.keys() if label is None else self._by_label.get(label, ())
            return [self.get_node(i) for i in sorted(ids)]  # type: ignore[misc]

    def edges(self, rel_type: str | None = None) -> list[EdgeRecord]:
        with self._lock:
            return [
                self.get_edge(e)  # type: ignore[misc]
                for e in sorted(self._edges)
                if rel_type is None or self._edges[e].rel_type == rel_type
            ]

    def out_edges(self, node_id: str, rel_type: str | None = None) -> list[EdgeRecord]:
        with self._lock:
            return [
                self.get_edge(e)  # type: ignore[misc]
                for e in sorted(self._out.get(node_id, ()))
                if rel_type is None or self._edges[e].rel_type == rel_type
            ]

    def in_edges(self, node_id: str, rel_type: str | None = None) -> list[EdgeRecord]:
        with self._lock:
            return [
                self.get_edge(e)  # type: ignore[misc]
                for e in sorted(self._in.get(node_id, ()))
                if rel_type is None or self._edges[e].rel_type == rel_type
            ]

    def walk_chain(self, head_id: str, rel_type: str = "NEXT") -> list[str]:
        """Follow single ``rel_type`` links from ``head_id``; returns visited ids."""
        order: list[str] = []
        seen: set[str] = set()
        current: str | None = head_id
        with self._lock:
            while current is not None and current not in seen:
                order.append(current)
                seen.add(current)
                nxt = self.out_edges(current, rel_type)
                current = nxt[0].to_id if nxt else None
        return order

    def derive_schema(self) -> GraphSchema:
        with self._lock:
            labels: dict[str, set[str]] = {}
            for node in self._nodes.values():
                for label in node.labels:
                    labels.setdefault(label, set()).update(node.properties)
            patterns: set[tuple[str, str, str]] = set()
            for edge in self._edges.values():
                for src in self._nodes[edge.from_id].labels:
                    for dst in self._nodes[edge.to_id].labels:
                        patterns.add((src, edge.rel_type, dst))
            return GraphSchema(
                {k: frozenset(v) for k, v in labels.items()}, frozenset(patterns)
            )

    # internal views used by the executor, called with the lock held
    def _node_ids_for(self, label: str | None) -> Iterable[str]:
        if label is None:
            return self._nodes.keys()
        return self._by_label.get(label, ())

    def _raw_node(self, node_id: str) -> NodeRecord:
        return self._nodes[node_id]

    def _raw_out(self, node_id: str) -> Iterator[EdgeRecord]:
        return (self._edges[e] for e in self._out.get(node_id, ()))

    def _raw_in(self, node_id: str) -> Iterator[EdgeRecord]:
        return (self._edges[e] for e in self._in.get(node_id, ()))

    # -- persistence --------------------------------------------------------

    def snapshot(self, path: str | os.PathLike[str]) -> None:
        """Write the store to ``path`` atomically.

        Layout: one JSON object per line. Line 1 is the header
        ``{"format", "format_version", "node_count", "edge_count"}``, then
        ``node_count`` node lines, then ``edge_count`` edge lines, all sorted
        by id.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock:
            lines = [
                json.dumps(
                    {
                        "format": SNAPSHOT_FORMAT,
                        "format_version": SNAPSHOT_VERSION,
                        "node_count": len(self._nodes),
                        "edge_count": len(self._edges),
                    }
                )
            ]
            lines += [json.dumps(self._nodes[i].to_json(), sort_keys=True) for i in sorted(self._nodes)]
            lines += [json.dumps(self._edges[i].to_json(), sort_keys=True) for i in sorted(self._edges)]
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> "GraphStore":
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptSnapshotError(f"{path}: not utf-8 text") from exc
        lines = [line for line in raw.split("\n") if line.strip()]
        if not lines:
            raise CorruptSnapshotError(f"{path}: empty snapshot")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise CorruptSnapshotError(f"{path}: unreadable header") from exc
        if not isinstance(header, dict) or header.get("format") != SNAPSHOT_FORMAT:
            raise CorruptSnapshotError(f"{path}: not a graph snapshot")
        if header.get("format_version") != SNAPSHOT_VERSION:
            raise SnapshotVersionError(
                f"{path}: format_version {header.get('format_version')!r}, expected {SNAPSHOT_VERSION}"
            )
        n_nodes, n_edges = header.get("node_count"), header.get("edge_count")
        if not isinstance(n_nodes, int) or not isinstance(n_edges, int):
            raise CorruptSnapshotError(f"{path}: bad header counts")
        if len(lines) != 1 + n_nodes + n_edges or not raw.endswith("\n"):
            raise CorruptSnapshotError(
                f"{path}: expected {n_nodes} nodes and {n_edges} edges, file is truncated or padded"
            )
        store = cls()
        try:
            for line in lines[1 : 1 + n_nodes]:
                store.upsert_node(NodeRecord.from_json(json.loads(line)))
            for line in lines[1 + n_nodes :]:
                store.upsert_edge(EdgeRecord.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, GraphStoreError) as exc:
            raise CorruptSnapshotError(f"{path}: {exc}") from exc
        if store.node_count != n_nodes or store.edge_count != n_edges:
            raise CorruptSnapshotError(f"{path}: duplicate records")
        return store
