"""Navigable-small-world graph index (approximate cosine top-k).

Defaults M=16, ef_construction=200, ef_search=384. The search default is
sized for the hardest supported workload (uniform random 128-d vectors,
where neighborhoods carry little signal); structured embedding data
reaches full recall at far smaller ef. The graph approximates the result
*set* only; similarities reported for returned ids are exact float64
inner products, so scores always agree with the flat index.

Filtered search strategy (documented tunables): when the allowed set is
below ``filter_scan_fraction`` of the live index, fall back to an exact
scan over the allowed ids; otherwise run the graph search with ef inflated
by ``filter_ef_inflation`` and post-filter, with an exact-scan fallback if
fewer than k survivors remain.

Deletions tombstone the node (traversed, never returned); a compaction
rebuild is triggered automatically once tombstones exceed half the nodes,
or explicitly via ``compact()``.
"""

from __future__ import annotations

import math
import threading
from typing import Iterable

import numpy as np

from ..errors import ValidationError
from .flat import Neighbor, check_insert_vector, normalize_query, top_k_with_ties
from . import kernels


class _RWLock:
    """Many readers / one writer; writers wait for readers to drain."""

    def __init__(self):
        self._readers = 0
        self._gate = threading.Lock()
        self._write = threading.Lock()

    def acquire_read(self):
        with self._gate:
            self._readers += 1
            if self._readers == 1:
                self._write.acquire()

    def release_read(self):
        with self._gate:
            self._readers -= 1
            if self._readers == 0:
                self._write.release()

    def acquire_write(self):
        self._write.acquire()

    def release_write(self):
        self._write.release()


class _Scratch:
    """Per-thread search scratch: epoch tags plus candidate heap arrays."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.tags = np.zeros(capacity, dtype=np.int64)
        self.cand_d = np.empty(capacity + 1, dtype=np.float32)
        self.cand_i = np.empty(capacity + 1, dtype=np.int32)
        self.tag = 0


class HnswIndex:
    structure = "graph"

    DEFAULT_M = 16
    DEFAULT_EF_CONSTRUCTION = 200
    DEFAULT_EF_SEARCH = 384

    def __init__(self, dim: int, plugin_name: str = "", M: int = DEFAULT_M,
                 ef_construction: int = DEFAULT_EF_CONSTRUCTION,
                 ef_search: int = DEFAULT_EF_SEARCH, seed: int = 0,
                 filter_scan_fraction: float = 0.01, filter_ef_inflation: int = 4):
        if dim < 1:
            raise ValidationError("index dimension must be positive")
        if M < 2 or ef_construction < M or ef_search < 1:
            raise ValidationError("invalid graph parameters")
        self.dim = int(dim)
        self.plugin_name = plugin_name
        self.M = int(M)
        self.M0 = 2 * int(M)
        self.ef_construction = int(ef_construction)
        self.ef_search = int(ef_search)
        self.seed = int(seed)
        self.filter_scan_fraction = float(filter_scan_fraction)
        self.filter_ef_inflation = int(filter_ef_inflation)
        self._ml = 1.0 / math.log(self.M)
        self._rng = np.random.default_rng(seed)
        self._lock = _RWLock()
        self._tls = threading.local()

        cap = 1024
        # +1 slot per row: reverse-link overflow is written in place before pruning
        self._vectors = np.zeros((cap, dim), dtype=np.float32)
        self._levels = np.zeros(cap, dtype=np.int32)
        self._links0 = np.zeros((cap, self.M0 + 1), dtype=np.int32)
        self._links0_cnt = np.zeros(cap, dtype=np.int32)
        self._upper_start = np.full(cap, -1, dtype=np.int32)
        self._alive = np.zeros(cap, dtype=np.uint8)
        upper_cap = 256
        self._upper_links = np.zeros((upper_cap, self.M + 1), dtype=np.int32)
        self._upper_cnt = np.zeros(upper_cap, dtype=np.int32)
        self._upper_rows = 0

        self._count = 0          # allocated node slots (including tombstones)
        self._live = 0
        self._entry = -1
        self._max_level = -1
        self._build_tag = 0
        self._build_scratch: _Scratch | None = None

        self._ids: list[str] = []          # node position -> doc_id
        self._pos: dict[str, int] = {}     # doc_id -> live node position

    # -- capacity management ----------------------------------------------

    def _ensure_node_capacity(self, needed: int) -> None:
        cap = self._vectors.shape[0]
        if needed <= cap:
            return
        new_cap = max(needed, int(cap * 1.5))
        self._vectors = self._grow(self._vectors, (new_cap, self.dim))
        self._levels = self._grow(self._levels, (new_cap,))
        self._links0 = self._grow(self._links0, (new_cap, self.M0 + 1))
        self._links0_cnt = self._grow(self._links0_cnt, (new_cap,))
        self._alive = self._grow(self._alive, (new_cap,))
        upper = np.full(new_cap, -1, dtype=np.int32)
        upper[: self._upper_start.shape[0]] = self._upper_start
        self._upper_start = upper
        self._build_scratch = None  # capacity changed; rebuild scratch

    def _ensure_upper_capacity(self, needed: int) -> None:
        cap = self._upper_links.shape[0]
        if needed <= cap:
            return
        new_cap = max(needed, int(cap * 1.5))
        self._upper_links = self._grow(self._upper_links, (new_cap, self.M + 1))
        self._upper_cnt = self._grow(self._upper_cnt, (new_cap,))

    @staticmethod
    def _grow(arr: np.ndarray, shape: tuple) -> np.ndarray:
        new = np.zeros(shape, dtype=arr.dtype)
        new[tuple(slice(0, s) for s in arr.shape)] = arr
        return new

    def _scratch_for_build(self) -> _Scratch:
        cap = self._vectors.shape[0]
        if self._build_scratch is None or self._build_scratch.capacity < cap:
            self._build_scratch = _Scratch(cap)
            self._build_tag = 0
        return self._build_scratch

    def _scratch_for_search(self) -> _Scratch:
        cap = self._vectors.shape[0]
        scratch = getattr(self._tls, "scratch", None)
        if scratch is None or scratch.capacity < cap:
            scratch = _Scratch(cap)
            self._tls.scratch = scratch
        return scratch

    # -- public surface -----------------------------------------------------

    def __len__(self) -> int:
        return self._live

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._pos

    def ids(self) -> list[str]:
        self._lock.acquire_read()
        try:
            return sorted(self._pos)
        finally:
            self._lock.release_read()

    def vector(self, doc_id: str) -> np.ndarray:
        self._lock.acquire_read()
        try:
            pos = self._pos.get(doc_id)
            if pos is None:
                raise ValidationError(f"doc {doc_id!r} not in index")
            return self._vectors[pos].copy()
        finally:
            self._lock.release_read()

    def insert(self, doc_id: str, vector: np.ndarray) -> None:
        v = check_insert_vector(vector, self.dim)
        self._lock.acquire_write()
        try:
            old = self._pos.pop(doc_id, None)
            if old is not None:
                self._alive[old] = 0
                self._live -= 1
            node = self._count
            self._ensure_node_capacity(node + 1)
            level = int(-math.log(max(1.0 - float(self._rng.random()), 1e-300)) * self._ml)
            if level >= 1:
                self._ensure_upper_capacity(self._upper_rows + level)
                self._upper_start[node] = self._upper_rows
                self._upper_cnt[self._upper_rows : self._upper_rows + level] = 0
                self._upper_rows += level
            self._vectors[node] = v
            self._levels[node] = level
            self._links0_cnt[node] = 0
            self._alive[node] = 1
            self._count = node + 1
            self._ids.append(doc_id)
            self._pos[doc_id] = node
            self._live += 1

            scratch = self._scratch_for_build()
            self._build_tag = int(kernels.insert_graph(
                self._vectors, self._levels, self._links0, self._links0_cnt,
                self._upper_links, self._upper_cnt, self._upper_start, self._alive,
                node, self._entry, self._max_level,
                self.ef_construction, self.M, self.M0,
                scratch.tags, self._build_tag, scratch.cand_d, scratch.cand_i))
            if level > self._max_level:
                self._entry = node
                self._max_level = level
        finally:
            self._lock.release_write()

    def delete(self, doc_id: str) -> bool:
        self._lock.acquire_write()
        try:
            pos = self._pos.pop(doc_id, None)
            if pos is None:
                return False
            self._alive[pos] = 0
            self._live -= 1
            needs_compact = self._count > 1000 and self._live < self._count // 2
        finally:
            self._lock.release_write()
        if needs_compact:
            self.compact()
        return True

    def compact(self) -> None:
        """Rebuild the graph without tombstoned nodes (position order kept)."""
        self._lock.acquire_write()
        try:
            pairs = [(pos, self._ids[pos]) for pos in sorted(self._pos.values())]
            vectors = [self._vectors[pos].copy() for pos, _ in pairs]
            rebuilt = HnswIndex(self.dim, self.plugin_name, self.M,
                                self.ef_construction, self.ef_search, self.seed,
                                self.filter_scan_fraction, self.filter_ef_inflation)
            for (pos, doc_id), vec in zip(pairs, vectors):
                rebuilt.insert(doc_id, vec)
            self.__dict__.update({
                k: v for k, v in rebuilt.__dict__.items()
                if k not in ("_lock", "_tls")
            })
            self._build_scratch = None
        finally:
            self._lock.release_write()

    def search(self, query: np.ndarray, k: int,
               allowed: Iterable[str] | None = None,
               ef_search: int | None = None) -> list[Neighbor]:
        """Best-effort top-k; exact float64 similarities for returned ids."""
        if k < 1:
            raise ValidationError("k must be >= 1")
        q = normalize_query(query, self.dim)
        ef = int(ef_search) if ef_search is not None else self.ef_search
        self._lock.acquire_read()
        try:
            if self._live == 0:
                return []
            if allowed is not None:
                allowed_ids = [d for d in set(allowed) if d in self._pos]
                if not allowed_ids:
                    return []
                if len(allowed_ids) < self.filter_scan_fraction * self._live:
                    return self._exact_over(allowed_ids, q, k)
                ef_eff = self.filter_ef_inflation * max(ef, k)
                ids, sims = self._graph_candidates(q, ef_eff)
                allowed_set = set(allowed_ids)
                kept = [(d, s) for d, s in zip(ids, sims) if d in allowed_set]
                if len(kept) < min(k, len(allowed_ids)):
                    return self._exact_over(allowed_ids, q, k)
                scores = np.asarray([s for _, s in kept], dtype=np.float64)
                return top_k_with_ties(scores, [d for d, _ in kept], k)
            ids, sims = self._graph_candidates(q, max(ef, k))
            return top_k_with_ties(np.asarray(sims, dtype=np.float64), ids, k)
        finally:
            self._lock.release_read()

    def _graph_candidates(self, q: np.ndarray, ef: int) -> tuple[list[str], list[float]]:
        scratch = self._scratch_for_search()
        scratch.tag += 1
        res_i, res_d, rsize = kernels.search_graph(
            self._vectors, self._levels, self._links0, self._links0_cnt,
            self._upper_links, self._upper_cnt, self._upper_start, self._alive,
            self._entry, self._max_level, q, int(ef),
            scratch.tags, scratch.tag, scratch.cand_d, scratch.cand_i)
        q64 = q.astype(np.float64)
        ids: list[str] = []
        sims: list[float] = []
        for t in range(rsize):
            pos = int(res_i[t])
            ids.append(self._ids[pos])
            sims.append(float(np.dot(self._vectors[pos].astype(np.float64), q64)))
        return ids, sims

    def _exact_over(self, allowed_ids: list[str], q: np.ndarray, k: int) -> list[Neighbor]:
        positions = sorted(self._pos[d] for d in allowed_ids)
        rows = np.asarray(positions, dtype=np.intp)
        scores = self._vectors[rows].astype(np.float64) @ q.astype(np.float64)
        ids = [self._ids[p] for p in positions]
        return top_k_with_ties(scores, ids, k)
