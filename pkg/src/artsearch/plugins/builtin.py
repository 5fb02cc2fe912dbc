"""Deterministic in-process extractors and the synthetic fixture-image codec.

These stand in for the heavyweight neural extractors that normally live
behind the inference protocol, so the whole pipeline is testable with zero
model dependencies:

* ``colorgram``  - 4x4 spatial grid of mean RGB values, 48 dims, image only.
* ``hashproj``   - seeded random projection of token hashes, 64 dims,
  image + text in one space. Text is tokenized and each token mapped to a
  fixed pseudo-random unit vector; an image either carries steganographic
  fixture text (see ``encode_text_image``) or is reduced to coarse
  color-grid pseudo-tokens. The image path adds a small fixed marker
  component (weight 0.05), which bounds text/image cosine for paired
  fixtures at sqrt(1 - 0.05^2) ~= 0.99875 from below.
* ``red-threshold`` - rule-based color-dominance classifier.
"""

from __future__ import annotations

import hashlib
import io

import numpy as np
from PIL import Image

from ..errors import ValidationError
from ..textutil import token_counts
from ..vecmath import l2_normalize
from .base import (
    CLASSIFIER,
    FEATURE,
    IMAGE,
    TEXT,
    ClassifierOutput,
    ExtractionInput,
    ExtractionItem,
    PluginManifest,
)

COLORGRAM_DIM = 48
HASHPROJ_DIM = 64

# Reserved hashproj tokens; NUL bytes keep them out of any tokenizer output.
_MARKER_TOKEN = "\x00image\x00"
_EMPTY_TOKEN = "\x00no-tokens\x00"
_MARKER_WEIGHT = 0.05

_STEGO_MAGIC = b"STG1"


# -- synthetic fixture images ------------------------------------------


def encode_text_image(text: str, size: int = 64) -> bytes:
    """Render ``text`` into a PNG whose pixels carry the text itself.

    Byte stream written row-major from pixel (0, 0), 3 bytes per pixel:
    magic "STG1", uint16 big-endian payload length, UTF-8 payload. The rest
    of the image is a text-hash-derived base color with mild per-pixel
    variation so color-based extractors see per-text structure too.
    """
    payload = text.encode("utf-8")
    capacity = size * size * 3 - len(_STEGO_MAGIC) - 2
    if len(payload) > min(capacity, 0xFFFF):
        raise ValidationError(f"fixture text too long for a {size}x{size} image")
    digest = hashlib.blake2b(payload, digest_size=3).digest()
    base = np.array([64 + (b % 128) for b in digest], dtype=np.int32)
    arr = np.empty((size, size, 3), dtype=np.uint8)
    rows = np.arange(size).reshape(-1, 1)
    cols = np.arange(size).reshape(1, -1)
    wobble = ((rows * 7 + cols * 13) % 17) - 8
    for c in range(3):
        arr[:, :, c] = np.clip(base[c] + wobble, 0, 255).astype(np.uint8)
    stream = _STEGO_MAGIC + len(payload).to_bytes(2, "big") + payload
    flat = arr.reshape(-1)
    flat[: len(stream)] = np.frombuffer(stream, dtype=np.uint8)
    img = Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_text_image(arr: np.ndarray) -> str | None:
    """Recover text embedded by ``encode_text_image``; None if absent."""
    flat = arr.reshape(-1)
    if flat.size < len(_STEGO_MAGIC) + 2:
        return None
    if bytes(flat[: len(_STEGO_MAGIC)].tobytes()) != _STEGO_MAGIC:
        return None
    n = int.from_bytes(flat[4:6].tobytes(), "big")
    start = len(_STEGO_MAGIC) + 2
    if flat.size < start + n:
        return None
    try:
        return flat[start : start + n].tobytes().decode("utf-8")
    except UnicodeDecodeError:
        return None


# -- shared image reductions -------------------------------------------


def _grid_means(arr: np.ndarray, grid: int = 4) -> np.ndarray:
    """Mean RGB per cell of a grid x grid split, scaled to [0, 1].

    Shape (grid, grid, 3); cell (gy, gx) covers a near-equal slice of the
    image (np.array_split semantics for sides not divisible by ``grid``).
    """
    h_parts = np.array_split(arr.astype(np.float64) / 255.0, grid, axis=0)
    cells = np.empty((grid, grid, 3), dtype=np.float64)
    for gy, band in enumerate(h_parts):
        for gx, cell in enumerate(np.array_split(band, grid, axis=1)):
            cells[gy, gx] = cell.mean(axis=(0, 1))
    return cells


# -- builtin backends ---------------------------------------------------


class BuiltinBackend:
    """Base for in-process plugin backends; subclasses are pure functions."""

    manifest: PluginManifest

    def extract_batch(self, inputs: list[ExtractionInput]) -> list[ExtractionItem]:
        items: list[ExtractionItem] = []
        for inp in inputs:
            try:
                if self.manifest.kind == CLASSIFIER:
                    out = self.classify_one(inp)
                    items.append(ExtractionItem(labels=out.labels))
                else:
                    items.append(ExtractionItem(vector=self.extract_one(inp)))
            except ValidationError as exc:
                items.append(ExtractionItem(error=exc.message))
        return items

    def extract_one(self, inp: ExtractionInput) -> np.ndarray:
        raise NotImplementedError

    def classify_one(self, inp: ExtractionInput) -> ClassifierOutput:
        raise NotImplementedError


class ColorgramBackend(BuiltinBackend):
    """4x4 grid of mean RGB, 48 dims, unit-normalized.

    Layout: index = (gy * 4 + gx) * 3 + channel, channel 0=R 1=G 2=B.
    An all-black image would be a zero vector; it maps to the uniform
    vector 1/sqrt(48) instead (documented degenerate case).
    """

    manifest = PluginManifest(
        name="colorgram",
        version="1.0.0",
        modalities=frozenset({IMAGE}),
        vector_dim=COLORGRAM_DIM,
        kind=FEATURE,
    )

    def extract_one(self, inp: ExtractionInput) -> np.ndarray:
        raw = _grid_means(inp.image_array()).reshape(-1)
        if float(np.linalg.norm(raw)) < 1e-12:
            raw = np.full(COLORGRAM_DIM, 1.0 / np.sqrt(COLORGRAM_DIM))
        return l2_normalize(raw)


def hashproj_token_vector(token: str) -> np.ndarray:
    """Fixed pseudo-random unit vector for one token (float64).

    Seed = first 8 bytes (big-endian) of blake2b(token, digest_size=8,
    person=b"hashproj"); vector = PCG64(seed).standard_normal(64), unit
    normalized. This is the contract the committed reference oracle
    recomputes independently.
    """
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, person=b"hashproj"
    ).digest()
    seed = int.from_bytes(digest, "big")
    v = np.random.default_rng(seed).standard_normal(HASHPROJ_DIM)
    return v / np.linalg.norm(v)


def _token_sum(counts: dict[str, int]) -> np.ndarray:
    if not counts:
        return hashproj_token_vector(_EMPTY_TOKEN).copy()
    acc = np.zeros(HASHPROJ_DIM, dtype=np.float64)
    for token in sorted(counts):
        acc += counts[token] * hashproj_token_vector(token)
    norm = float(np.linalg.norm(acc))
    if norm < 1e-12:
        return hashproj_token_vector(_EMPTY_TOKEN).copy()
    return acc / norm


class HashprojBackend(BuiltinBackend):
    """Cross-modal token-hash projection, 64 dims, image + text."""

    manifest = PluginManifest(
        name="hashproj",
        version="1.0.0",
        modalities=frozenset({IMAGE, TEXT}),
        vector_dim=HASHPROJ_DIM,
        kind=FEATURE,
    )

    def extract_one(self, inp: ExtractionInput) -> np.ndarray:
        if inp.kind == TEXT:
            return l2_normalize(_token_sum(token_counts(inp.payload)))
        arr = inp.image_array()
        embedded = decode_text_image(arr)
        if embedded is not None:
            base = _token_sum(token_counts(embedded))
        else:
            base = _token_sum(self._pseudo_tokens(arr))
        v = base + _MARKER_WEIGHT * hashproj_token_vector(_MARKER_TOKEN)
        return l2_normalize(v)

    @staticmethod
    def _pseudo_tokens(arr: np.ndarray) -> dict[str, int]:
        """Coarse color-grid tokens for images without embedded text."""
        cells = _grid_means(arr)
        quantized = np.clip((cells * 4).astype(int), 0, 3)
        tokens: dict[str, int] = {}
        for idx, (r, g, b) in enumerate(quantized.reshape(-1, 3)):
            tokens[f"px{idx:02d}:{r}{g}{b}"] = 1
        return tokens


class RedThresholdBackend(BuiltinBackend):
    """Rule-based color dominance labels: red/green/blue plus bright/dark."""

    taxonomy = "color-dominant"
    manifest = PluginManifest(
        name="red-threshold",
        version="1.0.0",
        modalities=frozenset({IMAGE}),
        vector_dim=1,
        kind=CLASSIFIER,
    )

    def classify_one(self, inp: ExtractionInput) -> ClassifierOutput:
        means = inp.image_array().astype(np.float64).mean(axis=(0, 1)) / 255.0
        labels: list[tuple[str, float]] = []
        names = ("red", "green", "blue")
        for c, name in enumerate(names):
            others = [means[o] for o in range(3) if o != c]
            dominance = means[c] - max(others)
            conf = min(max(2.0 * dominance, 0.0), 1.0)
            if conf >= 0.05:
                labels.append((name, conf))
        lum = float(means.mean())
        if lum >= 0.7:
            labels.append(("bright", min((lum - 0.7) / 0.3, 1.0)))
        elif lum <= 0.3:
            labels.append(("dark", min((0.3 - lum) / 0.3, 1.0)))
        return ClassifierOutput(labels=labels, taxonomy="color-dominant")


BUILTIN_BACKENDS: dict[str, type[BuiltinBackend]] = {
    "colorgram": ColorgramBackend,
    "hashproj": HashprojBackend,
    "red-threshold": RedThresholdBackend,
}


def builtin_backend(name: str) -> BuiltinBackend:
    try:
        return BUILTIN_BACKENDS[name]()
    except KeyError:
        raise ValidationError(
            f"unknown builtin plugin {name!r}; available: {sorted(BUILTIN_BACKENDS)}"
        ) from None
