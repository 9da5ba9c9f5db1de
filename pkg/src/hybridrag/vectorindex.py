"""Cosine-similarity vector index with an exact scan and an HNSW backend."""
from __future__ import annotations

import heapq
import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

INDEX_NAME = "accreditation_index"


class VectorIndexError(Exception):
    pass


class DimensionMismatchError(VectorIndexError):
    pass


class ZeroVectorError(VectorIndexError):
    pass


class DuplicateIdError(VectorIndexError):
    pass


@dataclass(frozen=True)
class HnswParams:
    m: int = 16
    ef_construction: int = 200
    ef_search: int = 64


@dataclass(frozen=True)
class IndexConfig:
    dim: int = 64
    metric: str = "cosine"
    backend: str = "exact"
    hnsw: HnswParams = field(default_factory=HnswParams)
    k: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.metric != "cosine":
            raise ValueError(f"unsupported metric {self.metric!r}")
        if self.backend not in ("exact", "hnsw"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.hnsw.m < 2:
            raise ValueError("HNSW M must be >= 2")
        if self.hnsw.ef_search < self.k:
            raise ValueError("efSearch must be >= k")
        if self.hnsw.ef_construction < 1:
            raise ValueError("efConstruction must be positive")


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    score: float


def as_embedding(values: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1:
        raise DimensionMismatchError(f"embedding must be 1-D, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise VectorIndexError("embedding has non-finite entries")
    return vec


def cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity, computed in float64.

    Raises:
        DimensionMismatchError: if the vectors differ in length.
        ZeroVectorError: if either vector is all zeros.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatchError(f"shapes {x.shape} and {y.shape} differ")
    nx, ny = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ZeroVectorError("cosine is undefined for a zero vector")
    return float(np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0))


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec.astype(np.float64)))
    if norm == 0.0:
        raise ZeroVectorError("zero vector")
    return (vec.astype(np.float64) / norm)


def _rank(ids: Sequence[str], scores: np.ndarray, k: int) -> list[SearchHit]:
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [SearchHit(ids[i], float(scores[i])) for i in order[:k]]


class HnswGraph:
    """Hierarchical navigable small world graph over unit vectors.

    Distance is ``1 - cosine``. Neighbour lists are chosen with the
    diversity heuristic and topped up with pruned candidates so every layer
    keeps up to M (2M on layer 0) links per node.
    """

    def __init__(self, dim: int, params: HnswParams, seed: int = 0) -> None:
        self.dim = dim
        self.m = params.m
        self.m0 = 2 * params.m
        self.ef_construction = params.ef_construction
        self.level_mult = 1.0 / math.log(params.m)
        self.rng = np.random.default_rng(seed)
        self.vectors = np.zeros((0, dim), dtype=np.float64)
        self.layers: list[dict[int, list[int]]] = []
        self.entry: int | None = None
        self.size = 0

    def _dist(self, q: np.ndarray, idx: Sequence[int]) -> np.ndarray:
        return 1.0 - self.vectors[list(idx)] @ q

    def _search_layer(self, q: np.ndarray, entries: list[int], ef: int, layer: int) -> list[tuple[float, int]]:
        graph = self.layers[layer]
        visited = set(entries)
        dists = self._dist(q, entries)
        candidates = [(float(d), e) for d, e in zip(dists, entries)]
        heapq.heapify(candidates)
        best = [(-d, e) for d, e in candidates]  # max-heap of the ef closest
        heapq.heapify(best)
        while len(best) > ef:
            heapq.heappop(best)
        while candidates:
            d, c = heapq.heappop(candidates)
            if d > -best[0][0] and len(best) >= ef:
                break
            fresh = [n for n in graph.get(c, ()) if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            for dn, n in zip(self._dist(q, fresh), fresh):
                dn = float(dn)
                if len(best) < ef or dn < -best[0][0]:
                    heapq.heappush(candidates, (dn, n))
                    heapq.heappush(best, (-dn, n))
                    if len(best) > ef:
                        heapq.heappop(best)
        return sorted((-d, e) for d, e in best)

    def _select(self, found: list[tuple[float, int]], m: int) -> list[int]:
        chosen: list[int] = []
        pruned: list[int] = []
        for d, c in found:
            if len(chosen) >= m:
                break
            if chosen:
                to_chosen = 1.0 - self.vectors[chosen] @ self.vectors[c]
                if np.any(to_chosen < d):
                    pruned.append(c)
                    continue
            chosen.append(c)
        for c in pruned:
            if len(chosen) >= m:
                break
            chosen.append(c)
        return chosen

    def insert(self, vec: np.ndarray) -> int:
        idx = self.size
        if idx == self.vectors.shape[0]:
            grown = np.zeros((max(16, 2 * idx), self.dim), dtype=np.float64)
            grown[:idx] = self.vectors[:idx]
            self.vectors = grown
        self.vectors[idx] = vec
        self.size += 1
        level = int(-math.log(1.0 - self.rng.random()) * self.level_mult)
        while len(self.layers) <= level:
            self.layers.append({})
        for lc in range(level + 1):
            self.layers[lc][idx] = []
        if self.entry is None:
            self.entry = idx
            return idx
        entry = self.entry
        top = max(lc for lc, layer in enumerate(self.layers) if entry in layer)
        eps = [entry]
        for lc in range(top, level, -1):
            eps = [self._search_layer(vec, eps, 1, lc)[0][1]]
        for lc in range(min(top, level), -1, -1):
            found = self._search_layer(vec, eps, self.ef_construction, lc)
            m_max = self.m0 if lc == 0 else self.m
            neighbours = self._select(found, self.m)
            graph = self.layers[lc]
            graph[idx] = neighbours
            for n in neighbours:
                links = graph[n]
                links.append(idx)
                if len(links) > m_max:
                    d = 1.0 - self.vectors[links] @ self.vectors[n]
                    ranked = sorted(zip(d.tolist(), links))
                    graph[n] = self._select(ranked, m_max)
            eps = [e for _, e in found]
        if level > top:
            self.entry = idx
        return idx

    def search(self, q: np.ndarray, k: int, ef: int) -> list[tuple[float, int]]:
        if self.entry is None:
            return []
        entry = self.entry
        top = max(lc for lc, layer in enumerate(self.layers) if entry in layer)
        eps = [entry]
        for lc in range(top, 0, -1):
            eps = [self._search_layer(q, eps, 1, lc)[0][1]]
        return self._search_layer(q, eps, max(ef, k), 0)


class VectorIndex:
    """Named embedding store answering cosine top-k queries.

    ``top_k`` always scans exactly. ``top_k_hnsw`` walks the HNSW graph and
    is only available with ``backend="hnsw"``; ``search`` picks whichever the
    config names. Writers serialize on a lock; exact reads work from an
    immutable (ids, matrix) snapshot and never block on it.
    """

    def __init__(self, config: IndexConfig | None = None, name: str = INDEX_NAME) -> None:
        self.config = config or IndexConfig()
        self.name = name
        self._lock = threading.Lock()
        self._ids: list[str] = []
        self._pos: dict[str, int] = {}
        self._raw: list[np.ndarray] = []
        self._buffer = np.zeros((0, self.config.dim))
        self._count = 0
        self._hnsw = (
            HnswGraph(self.config.dim, self.config.hnsw, self.config.seed)
            if self.config.backend == "hnsw"
            else None
        )

    def __len__(self) -> int:
        return self._count

    def _snapshot(self) -> tuple[list[str], np.ndarray]:
        # rows below _count are never rewritten, so a slice is a stable view
        n, buffer = self._count, self._buffer
        return self._ids[:n], buffer[:n]

    def __contains__(self, chunk_id: str) -> bool:
        return chunk_id in self._pos

    @property
    def dim(self) -> int:
        return self.config.dim

    def ids(self) -> list[str]:
        return self._ids[: self._count]

    def vector(self, chunk_id: str) -> np.ndarray:
        return self._raw[self._pos[chunk_id]].copy()

    def add(self, chunk_id: str, embedding: Sequence[float] | np.ndarray) -> None:
        vec = as_embedding(embedding, self.config.dim)
        unit = _normalize(vec)
        with self._lock:
            if chunk_id in self._pos:
                raise DuplicateIdError(f"{chunk_id!r} already indexed in {self.name}")
            self._pos[chunk_id] = len(self._ids)
            self._ids.append(chunk_id)
            self._raw.append(vec)
            n = self._count
            if n == self._buffer.shape[0]:
                grown = np.zeros((max(16, 2 * n), self.config.dim))
                grown[:n] = self._buffer[:n]
                self._buffer = grown
            self._buffer[n] = unit
            self._count = n + 1
            if self._hnsw is not None:
                self._hnsw.insert(unit)

    def _query_unit(self, query: Sequence[float] | np.ndarray) -> np.ndarray:
        return _normalize(as_embedding(query, self.config.dim))

    def top_k(self, query: Sequence[float] | np.ndarray, k: int | None = None) -> list[SearchHit]:
        """Exact top-k: score descending, ties broken by chunk id ascending."""
        k = self.config.k if k is None else k
        if k < 1:
            raise ValueError("k must be >= 1")
        q = self._query_unit(query)
        ids, matrix = self._snapshot()
        if not ids:
            return []
        scores = np.clip(matrix @ q, -1.0, 1.0)
        return _rank(ids, scores, k)

    def top_k_hnsw(self, query: Sequence[float] | np.ndarray, k: int | None = None,
                   ef_search: int | None = None) -> list[SearchHit]:
        """Approximate top-k through the HNSW graph, same ordering contract."""
        if self._hnsw is None:
            raise VectorIndexError("index was not built with the hnsw backend")
        k = self.config.k if k is None else k
        if k < 1:
            raise ValueError("k must be >= 1")
        q = self._query_unit(query)
        ef = self.config.hnsw.ef_search if ef_search is None else ef_search
        with self._lock:
            found = self._hnsw.search(q, k, ef)
            ids = [self._ids[i] for _, i in found]
            scores = np.clip(self._hnsw.vectors[[i for _, i in found]] @ q, -1.0, 1.0) if found else np.zeros(0)
        return _rank(ids, scores, k)

    def search(self, query: Sequence[float] | np.ndarray, k: int | None = None) -> list[SearchHit]:
        if self.config.backend == "hnsw":
            return self.top_k_hnsw(query, k)
        return self.top_k(query, k)

    # -- persistence --------------------------------------------------------

    def save(self, directory: str | os.PathLike[str]) -> Path:
        """Write ``<directory>/<name>.npz``; the HNSW graph is rebuilt on load."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{self.name}.npz"
        with self._lock:
            ids = np.array(self._ids, dtype=str)
            vectors = (np.vstack(self._raw) if self._raw else np.zeros((0, self.config.dim))).astype(np.float32)
        meta = json.dumps({"name": self.name, "dim": self.config.dim, "metric": self.config.metric})
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, ids=ids, vectors=vectors, meta=np.array(meta))
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, directory: str | os.PathLike[str], config: IndexConfig | None = None,
             name: str = INDEX_NAME) -> "VectorIndex":
        path = Path(directory) / f"{name}.npz"
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            ids = [str(i) for i in data["ids"]]
            vectors = data["vectors"]
        config = config or IndexConfig(dim=meta["dim"])
        if config.dim != meta["dim"]:
            config = IndexConfig(meta["dim"], config.metric, config.backend, config.hnsw,
                                 config.k, config.seed)
        index = cls(config, name)
        for chunk_id, vec in zip(ids, vectors):
            index.add(chunk_id, vec)
        return index
