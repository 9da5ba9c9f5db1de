"""Embedded property graph with a Cypher-subset query engine."""
from .cypher import (
    BOTH,
    IN,
    OUT,
    BoolOp,
    Comparison,
    CypherAst,
    CypherError,
    CypherSemanticError,
    CypherSyntaxError,
    NodePattern,
    NodeValue,
    Pattern,
    RelPattern,
    ResultTable,
    ReturnItem,
    execute,
    parse_cypher,
    print_cypher,
    run_query,
)
from .store import (
    CorruptSnapshotError,
    DanglingEndpointError,
    EdgeRecord,
    GraphSchema,
    GraphStore,
    GraphStoreError,
    InvalidPropertyError,
    InvalidRecordError,
    NodeRecord,
    SnapshotVersionError,
)

__all__ = [
    "BOTH", "IN", "OUT", "BoolOp", "Comparison", "CorruptSnapshotError", "CypherAst",
    "CypherError", "CypherSemanticError", "CypherSyntaxError", "DanglingEndpointError",
    "EdgeRecord", "GraphSchema", "GraphStore", "GraphStoreError", "InvalidPropertyError",
    "InvalidRecordError", "NodePattern", "NodeRecord", "NodeValue", "Pattern", "RelPattern",
    "ResultTable", "ReturnItem", "SnapshotVersionError", "execute", "parse_cypher",
    "print_cypher", "run_query",
]
