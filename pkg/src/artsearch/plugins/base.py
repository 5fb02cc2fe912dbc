"""Plugin domain types and the backend interface.

A *feature* plugin maps an image or text to one unit vector in a fixed
space; a *classifier* plugin emits keyword labels with confidences. Both
run either in-process ("builtin" backends, deterministic, dependency-free)
or behind the HTTP inference protocol ("remote" backends).
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import ValidationError
from ..vecmath import UNIT_NORM_TOL

IMAGE = "image"
TEXT = "text"
FEATURE = "feature"
CLASSIFIER = "classifier"

MIN_IMAGE_SIDE = 8


@dataclass(frozen=True)
class PluginManifest:
    """Identity, modality support, and vector dimension of an extractor."""

    name: str
    version: str
    modalities: frozenset[str]
    vector_dim: int
    kind: str = FEATURE
    deterministic: bool = True

    def __post_init__(self):
        if not self.name:
            raise ValidationError("plugin name must be non-empty")
        mods = frozenset(self.modalities)
        if not mods or not mods.issubset({IMAGE, TEXT}):
            raise ValidationError(
                f"modalities must be a non-empty subset of {{image, text}}, got {sorted(self.modalities)}"
            )
        object.__setattr__(self, "modalities", mods)
        if self.vector_dim < 1:
            raise ValidationError("vector_dim must be a positive integer")
        if self.kind not in (FEATURE, CLASSIFIER):
            raise ValidationError(f"plugin kind must be 'feature' or 'classifier', got {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "modalities": sorted(self.modalities),
            "vector_dim": self.vector_dim,
            "kind": self.kind,
            "deterministic": self.deterministic,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PluginManifest":
        return cls(
            name=data["name"],
            version=data.get("version", "0"),
            modalities=frozenset(data.get("modalities", [])),
            vector_dim=int(data["vector_dim"]),
            kind=data.get("kind", FEATURE),
            deterministic=bool(data.get("deterministic", True)),
        )


class ExtractionInput:
    """One item submitted for extraction: image bytes or a text string."""

    __slots__ = ("kind", "payload", "_decoded")

    def __init__(self, kind: str, payload: bytes | str):
        if kind not in (IMAGE, TEXT):
            raise ValidationError(f"input kind must be 'image' or 'text', got {kind!r}")
        if kind == TEXT:
            if not isinstance(payload, str):
                raise ValidationError("text input payload must be a string")
            if not payload.strip():
                raise ValidationError("text input is empty after trimming")
        else:
            if not isinstance(payload, (bytes, bytearray)):
                raise ValidationError("image input payload must be bytes")
            payload = bytes(payload)
        self.kind = kind
        self.payload = payload
        self._decoded: np.ndarray | None = None

    @classmethod
    def text(cls, text: str) -> "ExtractionInput":
        return cls(TEXT, text)

    @classmethod
    def image(cls, data: bytes) -> "ExtractionInput":
        return cls(IMAGE, data)

    def image_array(self) -> np.ndarray:
        """Decode to an RGB uint8 array (H, W, 3); memoized.

        Raises ValidationError for undecodable bytes or images smaller than
        8x8 pixels; callers batching inputs turn this into a per-item error.
        """
        if self.kind != IMAGE:
            raise ValidationError("not an image input")
        if self._decoded is None:
            try:
                with Image.open(io.BytesIO(self.payload)) as img:
                    rgb = img.convert("RGB")
                    arr = np.asarray(rgb, dtype=np.uint8)
            except (UnidentifiedImageError, OSError, ValueError) as exc:
                raise ValidationError(f"cannot decode image: {exc}") from exc
            h, w = arr.shape[:2]
            if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
                raise ValidationError(
                    f"image too small ({w}x{h}); minimum side is {MIN_IMAGE_SIDE} pixels"
                )
            self._decoded = arr
        return self._decoded

    def content_hash(self) -> str:
        """Stable identity of the payload, used as the extraction cache key."""
        h = hashlib.sha256()
        if self.kind == TEXT:
            h.update(b"text:")
            h.update(self.payload.encode("utf-8"))
        else:
            h.update(b"image:")
            h.update(self.payload)
        return h.hexdigest()


def _clean_labels(labels: Sequence[tuple[str, float]]) -> list[tuple[str, float]]:
    seen: dict[str, float] = {}
    for keyword, conf in labels:
        conf = float(conf)
        if not 0.0 <= conf <= 1.0:
            raise ValidationError(f"label confidence {conf} outside [0, 1]")
        if keyword not in seen or conf > seen[keyword]:
            seen[keyword] = conf
    return sorted(seen.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass
class ClassifierOutput:
    """Keyword labels with confidences, plus a taxonomy tag."""

    labels: list[tuple[str, float]]
    taxonomy: str = ""

    def __post_init__(self):
        self.labels = _clean_labels(self.labels)


@dataclass
class FeatureRecord:
    """One plugin's embedding (and optional keyword annotations) for one document."""

    doc_id: str
    plugin_name: str
    plugin_version: str
    vector: np.ndarray
    annotations: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float32)
        norm = float(np.linalg.norm(v.astype(np.float64)))
        if norm < 1e-12:
            raise ValidationError("feature vector is zero")
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            v = (v.astype(np.float64) / norm).astype(np.float32)
        self.vector = v
        self.annotations = _clean_labels(self.annotations)


@dataclass
class ExtractionItem:
    """Per-input outcome of a batch extraction."""

    vector: np.ndarray | None = None
    labels: list[tuple[str, float]] | None = None
    error: str | None = None
    cached: bool = False

    @property
    def ok(self) -> bool:
        return self.error is None
