"""Exact exhaustive-scan similarity index over unit vectors.

The flat index is both the small-collection serving path and the
correctness oracle for the graph index: search returns the true top-k
under the global tie rule (similarity desc, doc_id asc), scored with
float64 inner products.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import ValidationError
from ..vecmath import UNIT_NORM_TOL

_CHUNK_ROWS = 131072


@dataclass(frozen=True)
class Neighbor:
    doc_id: str
    similarity: float


def normalize_query(query: np.ndarray, dim: int) -> np.ndarray:
    q = np.asarray(query, dtype=np.float32)
    if q.shape != (dim,):
        raise ValidationError(f"query has shape {q.shape}, index dimension is {dim}")
    norm = float(np.linalg.norm(q.astype(np.float64)))
    if norm < 1e-12:
        raise ValidationError("query vector is zero")
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        q = (q.astype(np.float64) / norm).astype(np.float32)
    return q


def check_insert_vector(vector: np.ndarray, dim: int) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float32)
    if v.shape != (dim,):
        raise ValidationError(f"vector has shape {v.shape}, index dimension is {dim}")
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValidationError(f"vector is not unit-normalized (norm={norm:.6f})")
    return v


def top_k_with_ties(scores: np.ndarray, ids: Sequence[str], k: int) -> list[Neighbor]:
    """True top-k of (score desc, doc_id asc) over parallel arrays."""
    n = scores.shape[0]
    if n == 0 or k <= 0:
        return []
    k = min(k, n)
    if n > 4 * k and n > 1024:
        part = np.argpartition(-scores, k - 1)[:k]
        smin = scores[part].min()
        cand = np.flatnonzero(scores >= smin)
    else:
        cand = np.arange(n)
    ranked = sorted(((-scores[i], ids[i], i) for i in cand))
    return [Neighbor(doc_id=doc_id, similarity=float(-neg)) for neg, doc_id, _ in ranked[:k]]


class FlatIndex:
    """Exact cosine index; thread-safe, insert replaces on duplicate id."""

    structure = "flat"

    def __init__(self, dim: int, plugin_name: str = ""):
        if dim < 1:
            raise ValidationError("index dimension must be positive")
        self.dim = int(dim)
        self.plugin_name = plugin_name
        self._lock = threading.RLock()
        self._matrix = np.zeros((0, dim), dtype=np.float32)
        self._ids: list[str] = []
        self._pos: dict[str, int] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._ids)

    def __contains__(self, doc_id: str) -> bool:
        with self._lock:
            return doc_id in self._pos

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._ids)

    def insert(self, doc_id: str, vector: np.ndarray) -> None:
        v = check_insert_vector(vector, self.dim)
        with self._lock:
            pos = self._pos.get(doc_id)
            if pos is not None:
                self._matrix[pos] = v
                return
            if len(self._ids) == self._matrix.shape[0]:
                grow = max(64, int(self._matrix.shape[0] * 1.5))
                new = np.zeros((grow, self.dim), dtype=np.float32)
                new[: self._matrix.shape[0]] = self._matrix
                self._matrix = new
            self._pos[doc_id] = len(self._ids)
            self._matrix[len(self._ids)] = v
            self._ids.append(doc_id)

    def delete(self, doc_id: str) -> bool:
        with self._lock:
            pos = self._pos.pop(doc_id, None)
            if pos is None:
                return False
            last = len(self._ids) - 1
            if pos != last:
                self._matrix[pos] = self._matrix[last]
                moved = self._ids[last]
                self._ids[pos] = moved
                self._pos[moved] = pos
            self._ids.pop()
            return True

    def vector(self, doc_id: str) -> np.ndarray:
        with self._lock:
            pos = self._pos.get(doc_id)
            if pos is None:
                raise ValidationError(f"doc {doc_id!r} not in index")
            return self._matrix[pos].copy()

    def search(self, query: np.ndarray, k: int,
               allowed: Iterable[str] | None = None) -> list[Neighbor]:
        """Exact top-k; restricted to ``allowed`` ids when given."""
        if k < 1:
            raise ValidationError("k must be >= 1")
        q = normalize_query(query, self.dim)
        with self._lock:
            n = len(self._ids)
            if n == 0:
                return []
            if allowed is not None:
                positions = sorted(self._pos[d] for d in set(allowed) if d in self._pos)
                if not positions:
                    return []
                rows = np.asarray(positions, dtype=np.intp)
                scores = self._score_rows(self._matrix, rows, q)
                ids = [self._ids[p] for p in positions]
                return top_k_with_ties(scores, ids, k)
            scores = self._score_all(self._matrix, n, q)
            return top_k_with_ties(scores, self._ids, k)

    @staticmethod
    def _score_all(matrix: np.ndarray, n: int, q: np.ndarray) -> np.ndarray:
        q64 = q.astype(np.float64)
        out = np.empty(n, dtype=np.float64)
        for start in range(0, n, _CHUNK_ROWS):
            stop = min(start + _CHUNK_ROWS, n)
            out[start:stop] = matrix[start:stop].astype(np.float64) @ q64
        return out

    @staticmethod
    def _score_rows(matrix: np.ndarray, rows: np.ndarray, q: np.ndarray) -> np.ndarray:
        return matrix[rows].astype(np.float64) @ q.astype(np.float64)
