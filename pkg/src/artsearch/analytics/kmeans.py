"""Seeded k-means (k-means++ init, Lloyd iterations, empty-cluster repair).

The procedure is pinned down exactly so an independently written oracle
with the same seed reproduces assignments and SSE bit-for-bit:

* Input points are ordered by ascending doc_id; all math is float64.
* Init (k-means++), rng = np.random.default_rng(seed):
  first centroid index = int(rng.integers(n)); each subsequent centroid is
  drawn by d2-sampling: u = rng.random(), index = searchsorted(cumsum(d2),
  u * sum(d2), side="right") clipped to n-1, where d2[i] is the squared
  euclidean distance of point i to its nearest chosen centroid; if
  sum(d2) == 0 the index is int(rng.integers(n)) instead.
* Iteration: assign each point to the nearest centroid (ties -> lowest
  centroid index); repair empty clusters in ascending cluster order by
  moving the point with the largest distance to its assigned centroid
  (ties -> lowest point index, donors restricted to clusters holding at
  least two points so a repair never empties another cluster) into the
  empty cluster, which also becomes the cluster's centroid; recompute
  centroids as cluster means; SSE is measured after each assign+repair
  pass.
* Stop when the relative SSE improvement (prev - cur) <= tol * prev, or
  after max_iter update rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass
class ClusterAssignment:
    k: int
    assignments: dict[str, int]
    centroids: np.ndarray
    sse: float
    iterations: int
    seed: int
    sse_history: list[float] = field(default_factory=list)


def _as_matrix(vectors: dict[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    if not vectors:
        raise ValidationError("no vectors given")
    ids = sorted(vectors)
    X = np.asarray([np.asarray(vectors[d], dtype=np.float64) for d in ids])
    if X.ndim != 2:
        raise ValidationError("vectors must share one dimension")
    return ids, X


def _dist2(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # (n, k) squared euclidean distances, computed as an explicit
    # difference so the oracle can reproduce the exact float ops
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = int(rng.integers(n))
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            u = float(rng.random())
            idx = int(np.searchsorted(np.cumsum(d2), u * total, side="right"))
            idx = min(idx, n - 1)
        chosen[j] = idx
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _assign_and_repair(X: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, float]:
    k = C.shape[0]
    d2 = _dist2(X, C)
    assign = d2.argmin(axis=1)
    dmin = d2[np.arange(X.shape[0]), assign]
    counts = np.bincount(assign, minlength=k)
    for c in range(k):
        if counts[c] == 0:
            eligible = counts[assign] >= 2
            p = int(np.where(eligible, dmin, -1.0).argmax())
            counts[assign[p]] -= 1
            counts[c] += 1
            C[c] = X[p]
            assign[p] = c
            dmin[p] = 0.0
    return assign, float(dmin.sum())


def kmeans(vectors: dict[str, np.ndarray], k: int, seed: int = 0,
           max_iter: int = 100, tol: float = 1e-4) -> ClusterAssignment:
    """Cluster unit (or arbitrary) vectors; deterministic for (inputs, k, seed)."""
    ids, X = _as_matrix(vectors)
    n = X.shape[0]
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of points ({n})")
    rng = np.random.default_rng(seed)
    C = kmeans_pp_init(X, k, rng)
    assign, sse = _assign_and_repair(X, C)
    history = [sse]
    iterations = 0
    for _ in range(max_iter):
        C_new = np.empty_like(C)
        for c in range(k):
            C_new[c] = X[assign == c].mean(axis=0)
        assign_new, sse_new = _assign_and_repair(X, C_new)
        iterations += 1
        history.append(sse_new)
        if __debug__ and sse_new > history[-2]:
            raise AssertionError(
                f"SSE increased at iteration {iterations}: {history[-2]} -> {sse_new}")
        converged = sse_new >= sse or (sse - sse_new) <= tol * sse
        C, assign, sse = C_new, assign_new, sse_new
        if converged:
            break
    return ClusterAssignment(
        k=k,
        assignments={ids[i]: int(assign[i]) for i in range(n)},
        centroids=C,
        sse=sse,
        iterations=iterations,
        seed=seed,
        sse_history=history,
    )


def default_cluster_count(n: int) -> int:
    """Heuristic k for the clusters layout when the caller does not choose."""
    if n <= 1:
        return 1
    return min(8, int(np.ceil(np.sqrt(n / 2.0))))
