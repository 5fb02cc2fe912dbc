"""Deterministic 2D PCA projection (fallback layout for the canvas view)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass
class Projection2D:
    method: str
    coords: dict[str, tuple[float, float]]
    params: dict = field(default_factory=dict)
    seed: int | None = None


def _sign_fix(component: np.ndarray) -> np.ndarray:
    """Largest-magnitude loading positive (ties -> lowest index)."""
    pivot = int(np.abs(component).argmax())
    return -component if component[pivot] < 0 else component


def pca2d(vectors: dict[str, np.ndarray]) -> Projection2D:
    """Project centered data onto the top-2 principal directions.

    Deterministic: SVD of the centered matrix with a fixed sign convention.
    Rank-0 input (all points identical) yields all-zero coords and a
    ``degenerate`` flag; rank-1 input collapses the y coordinate.
    """
    if len(vectors) < 2:
        raise ValidationError("pca2d needs at least 2 points")
    ids = sorted(vectors)
    X = np.asarray([np.asarray(vectors[d], dtype=np.float64) for d in ids])
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    U, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    # components with ~zero singular value are noise directions; zero them
    tiny = max(S[0], 1.0) * 1e-12
    comps = []
    explained = []
    for i in range(min(2, Vt.shape[0])):
        if S[i] > tiny:
            comps.append(_sign_fix(Vt[i]))
            explained.append(float(S[i] ** 2 / (n - 1)))
        else:
            comps.append(np.zeros(X.shape[1]))
            explained.append(0.0)
    while len(comps) < 2:
        comps.append(np.zeros(X.shape[1]))
        explained.append(0.0)
    W = np.asarray(comps)  # (2, dim)
    coords = Xc @ W.T
    degenerate = bool(S.size == 0 or S[0] <= tiny)
    return Projection2D(
        method="pca",
        coords={ids[i]: (float(coords[i, 0]), float(coords[i, 1])) for i in range(n)},
        params={"explained_variance": explained, "degenerate": degenerate},
    )
