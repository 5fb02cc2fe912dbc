"""Small vector helpers used by plugins, indexes, and the query engine."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

# |norm - 1| tolerance for vectors entering an index or a FeatureRecord.
UNIT_NORM_TOL = 1e-4


def l2_normalize(vector: np.ndarray) -> np.ndarray:
    """Return ``vector / ||vector||`` as float32.

    Raises ValidationError for a (near-)zero vector; callers that can
    tolerate zero vectors must guard before calling.
    """
    v = np.asarray(vector, dtype=np.float32)
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if norm < 1e-12:
        raise ValidationError("cannot normalize a zero vector")
    return (v.astype(np.float64) / norm).astype(np.float32)


def check_unit(vector: np.ndarray, *, what: str = "vector") -> np.ndarray:
    """Validate the unit-norm invariant and return the vector as float32."""
    v = np.asarray(vector, dtype=np.float32)
    if v.ndim != 1:
        raise ValidationError(f"{what} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{what} contains non-finite values")
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValidationError(f"{what} is not unit-normalized (norm={norm:.6f})")
    return v


def cosine64(a: np.ndarray, b: np.ndarray) -> float:
    """Exact float64 inner product of two (unit) vectors.

    This is the score every search path reports, so flat and graph
    indexes agree on similarity values for the same pair.
    """
    return float(np.dot(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))
