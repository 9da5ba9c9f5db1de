"""Hybrid-context retrieval augmented generation over a property graph and a vector index."""

__version__ = "0.1.0"
