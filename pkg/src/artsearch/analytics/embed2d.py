"""Neighbor-embedding 2D layout for the canvas view.

Pipeline: exact cosine kNN graph -> per-point bandwidth calibration
(binary search so the smoothed neighbor weights of each point sum to
log2(n_neighbors)) -> fuzzy symmetrization (a + b - a*b) -> PCA
initialization -> seeded stochastic gradient descent on the cross-entropy
layout objective with negative sampling. Deterministic for a fixed seed:
points are processed in doc_id order and the SGD uses an explicit
xorshift RNG.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.optimize import curve_fit

from ..errors import ValidationError
from .pca import Projection2D, pca2d

_SMOOTH_TOL = 1e-5
_MIN_SCALE = 1e-3
_INIT_EXTENT = 10.0


def exact_knn_cosine(X: np.ndarray, n_neighbors: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact kNN under cosine distance; ties break toward lower index.

    Returns (indices, distances), each (n, n_neighbors), self excluded.
    """
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    Xu = X / norms
    D = 1.0 - Xu @ Xu.T
    np.clip(D, 0.0, None, out=D)
    n = X.shape[0]
    idx = np.empty((n, n_neighbors), dtype=np.int64)
    dist = np.empty((n, n_neighbors), dtype=np.float64)
    for i in range(n):
        row = D[i].copy()
        row[i] = np.inf
        order = np.argsort(row, kind="stable")[:n_neighbors]
        idx[i] = order
        dist[i] = row[order]
    return idx, dist


def smooth_knn_calibration(dist: np.ndarray, n_neighbors: int,
                           n_iter: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (sigma, rho) with sum_j exp(-(d_ij - rho_i)/sigma_i) = log2(k).

    rho_i is the smallest nonzero neighbor distance; terms with d <= rho
    contribute 1. sigma is floored at 1e-3 of the mean neighbor distance.
    """
    n = dist.shape[0]
    target = math.log2(n_neighbors)
    rho = np.zeros(n)
    sigma = np.zeros(n)
    mean_all = float(dist.mean()) if dist.size else 0.0
    for i in range(n):
        row = dist[i]
        nonzero = row[row > 0.0]
        if nonzero.size > 0:
            rho[i] = float(nonzero[0])
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(n_iter):
            psum = 0.0
            for d in row:
                gap = d - rho[i]
                psum += math.exp(-gap / mid) if gap > 0 else 1.0
            if abs(psum - target) < _SMOOTH_TOL:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = mid
        floor = _MIN_SCALE * (float(row.mean()) if rho[i] > 0 else mean_all)
        if sigma[i] < floor:
            sigma[i] = floor
    return sigma, rho


def fuzzy_graph(idx: np.ndarray, dist: np.ndarray,
                sigma: np.ndarray, rho: np.ndarray, n: int) -> np.ndarray:
    """Dense symmetrized membership matrix W = A + A^T - A*A^T."""
    A = np.zeros((n, n))
    for i in range(idx.shape[0]):
        for t in range(idx.shape[1]):
            j = idx[i, t]
            gap = dist[i, t] - rho[i]
            w = 1.0 if gap <= 0 or sigma[i] == 0 else math.exp(-gap / sigma[i])
            A[i, j] = max(A[i, j], w)
    return A + A.T - A * A.T


def fit_attraction_curve(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Fit (a, b) of 1/(1 + a x^(2b)) to the offset exponential for min_dist."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.ones_like(xv)
    mask = xv >= min_dist
    yv[mask] = np.exp(-(xv[mask] - min_dist) / spread)
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    result = -1.0 * np.ones(weights.shape[0])
    n_samples = n_epochs * (weights / weights.max())
    result[n_samples > 0] = float(n_epochs) / n_samples[n_samples > 0]
    return result


@njit(inline="always")
def _xorshift(state):
    s = state[0]
    s ^= s >> np.uint64(12)
    s ^= (s << np.uint64(25)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    s ^= s >> np.uint64(27)
    state[0] = s
    return (s * np.uint64(2685821657736338717)) & np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(inline="always")
def _clip4(x):
    if x > 4.0:
        return 4.0
    if x < -4.0:
        return -4.0
    return x


@njit(cache=True)
def _optimize_layout(emb, head, tail, epochs_per_sample, n_epochs, a, b,
                     gamma, initial_alpha, negative_sample_rate, rng_state):
    """Cross-entropy SGD with negative sampling; both edge endpoints move."""
    n_vertices = emb.shape[0]
    epochs_per_negative = epochs_per_sample / negative_sample_rate
    next_neg = epochs_per_negative.copy()
    next_pos = epochs_per_sample.copy()
    alpha = initial_alpha
    for epoch in range(n_epochs):
        for e in range(epochs_per_sample.shape[0]):
            if next_pos[e] > epoch:
                continue
            j = head[e]
            k = tail[e]
            dx = emb[j, 0] - emb[k, 0]
            dy = emb[j, 1] - emb[k, 1]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2 ** b + 1.0)
                gx = _clip4(coeff * dx)
                gy = _clip4(coeff * dy)
                emb[j, 0] += gx * alpha
                emb[j, 1] += gy * alpha
                emb[k, 0] -= gx * alpha
                emb[k, 1] -= gy * alpha
            next_pos[e] += epochs_per_sample[e]
            n_neg = int((epoch - next_neg[e]) / epochs_per_negative[e])
            for _ in range(n_neg):
                t = int(_xorshift(rng_state) % np.uint64(n_vertices))
                if t == j:
                    continue
                dx = emb[j, 0] - emb[t, 0]
                dy = emb[j, 1] - emb[t, 1]
                d2 = dx * dx + dy * dy
                if d2 > 0.0:
                    coeff = (2.0 * gamma * b) / ((0.001 + d2) * (a * d2 ** b + 1.0))
                    gx = _clip4(coeff * dx)
                    gy = _clip4(coeff * dy)
                else:
                    gx = 4.0
                    gy = 4.0
                emb[j, 0] += gx * alpha
                emb[j, 1] += gy * alpha
            next_neg[e] += n_neg * epochs_per_negative[e]
        alpha = initial_alpha * (1.0 - (epoch + 1.0) / n_epochs)
    return emb


def neighbor_embed_2d(vectors: dict[str, np.ndarray], n_neighbors: int = 15,
                      min_dist: float = 0.1, epochs: int = 200,
                      seed: int = 0) -> Projection2D:
    """UMAP-style 2D layout; deterministic for (inputs, params, seed)."""
    n = len(vectors)
    minimum = max(n_neighbors + 1, 10)
    if n < minimum:
        raise ValidationError(
            f"neighbor embedding needs at least {minimum} points (got {n}); use pca2d instead"
        )
    if n_neighbors < 2:
        raise ValidationError("n_neighbors must be >= 2")
    ids = sorted(vectors)
    X = np.asarray([np.asarray(vectors[d], dtype=np.float64) for d in ids])
    idx, dist = exact_knn_cosine(X, n_neighbors)
    sigma, rho = smooth_knn_calibration(dist, n_neighbors)
    W = fuzzy_graph(idx, dist, sigma, rho, n)
    a, b = fit_attraction_curve(min_dist)

    init = pca2d({ids[i]: X[i] for i in range(n)})
    emb = np.asarray([init.coords[d] for d in ids], dtype=np.float64)
    extent = float(np.abs(emb).max())
    if extent > 0:
        emb *= _INIT_EXTENT / extent
    emb = emb.astype(np.float32)

    rows, cols = np.nonzero(W)
    weights = W[rows, cols]
    keep = weights >= weights.max() / float(epochs)
    rows, cols, weights = rows[keep], cols[keep], weights[keep]
    eps = make_epochs_per_sample(weights, epochs)
    rng_state = np.array([np.uint64(seed) ^ np.uint64(0x9E3779B97F4A7C15) | np.uint64(1)],
                         dtype=np.uint64)
    emb = _optimize_layout(emb, rows.astype(np.int32), cols.astype(np.int32),
                           eps, int(epochs), a, b, 1.0, 1.0, 5.0, rng_state)
    emb = emb.astype(np.float64)
    emb -= emb.mean(axis=0)
    return Projection2D(
        method="neighbor-embed",
        coords={ids[i]: (float(emb[i, 0]), float(emb[i, 1])) for i in range(n)},
        params={"n_neighbors": n_neighbors, "min_dist": min_dist,
                "epochs": epochs, "a": a, "b": b},
        seed=seed,
    )
