"""On-disk layout of a knowledge base: ``graph.jsonl`` plus the vector index."""
from __future__ import annotations

import fcntl
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from .graphstore import GraphStore
from .vectorindex import INDEX_NAME, IndexConfig, VectorIndex

GRAPH_FILE = "graph.jsonl"
STANDARDS_FILE = "standards.json"
LOCK_FILE = ".writer.lock"


class StoreBusyError(RuntimeError):
    pass


def graph_path(store_dir: Path) -> Path:
    return Path(store_dir) / GRAPH_FILE


def open_store(store_dir: Path) -> GraphStore:
    path = graph_path(store_dir)
    return GraphStore.load(path) if path.exists() else GraphStore()


def save_store(store: GraphStore, store_dir: Path) -> None:
    Path(store_dir).mkdir(parents=True, exist_ok=True)
    store.snapshot(graph_path(store_dir))


def open_index(store_dir: Path, config: IndexConfig) -> VectorIndex:
    if (Path(store_dir) / f"{INDEX_NAME}.npz").exists():
        return VectorIndex.load(store_dir, config)
    return VectorIndex(config)


@contextmanager
def writer_lock(store_dir: Path) -> Iterator[None]:
    """Exclusive, non-blocking writer lock on the store directory."""
    Path(store_dir).mkdir(parents=True, exist_ok=True)
    fd = os.open(Path(store_dir) / LOCK_FILE, os.O_CREAT | os.O_RDWR, 0o644)
    try:
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise StoreBusyError(f"another writer holds {store_dir}") from None
        yield
    finally:
        os.close(fd)
