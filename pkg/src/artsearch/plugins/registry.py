"""Plugin registry: registration, cached extraction, classification.

The registry fronts every backend with a content-hash cache keyed by
(plugin, version, sha256 of payload), which makes re-ingestion idempotent
and pins down non-deterministic remote models. Backend invocations are
counted per plugin so callers can assert cache behavior.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..vecmath import UNIT_NORM_TOL
from .base import (
    CLASSIFIER,
    FEATURE,
    IMAGE,
    ClassifierOutput,
    ExtractionInput,
    ExtractionItem,
    PluginManifest,
)
from .builtin import BUILTIN_BACKENDS, builtin_backend
from .remote import RemoteBackend


class _Registered:
    __slots__ = ("manifest", "backend")

    def __init__(self, manifest: PluginManifest, backend):
        self.manifest = manifest
        self.backend = backend


class PluginRegistry:
    """Thread-safe registry of extraction and classification plugins."""

    def __init__(self, cache_path: str | Path | None = None):
        self._lock = threading.RLock()
        self._plugins: dict[str, _Registered] = {}
        self._cache: dict[tuple[str, str, str], ExtractionItem] = {}
        self._cache_path = Path(cache_path) if cache_path else None
        self._cache_log = None
        self.backend_calls: dict[str, int] = {}
        if self._cache_path:
            self._load_cache()
            self._cache_path.parent.mkdir(parents=True, exist_ok=True)
            self._cache_log = open(self._cache_path, "a", encoding="utf-8")

    # -- registration ----------------------------------------------------

    def register_plugin(self, backend_spec: str, manifest: PluginManifest | None = None,
                        timeout: float = 30.0, max_in_flight: int = 4) -> PluginManifest:
        """Register a plugin from a backend spec.

        ``backend_spec`` is ``"builtin:<id>"`` (or a bare builtin id) for an
        in-process backend, or an ``http(s)://`` endpoint implementing the
        inference protocol; remote endpoints are health-checked here and the
        manifest advertised by the endpoint is used. A name already
        registered with a different vector dimension is rejected.
        """
        if backend_spec.startswith(("http://", "https://")):
            if manifest is None or not manifest.name:
                raise ValidationError("remote registration requires a manifest with the plugin name")
            backend = RemoteBackend(manifest.name, backend_spec,
                                    timeout=timeout, max_in_flight=max_in_flight)
            served = backend.manifest
            if served.vector_dim != manifest.vector_dim:
                backend.close()
                raise ValidationError(
                    f"endpoint serves {manifest.name!r} with dim {served.vector_dim}, "
                    f"registration requested dim {manifest.vector_dim}"
                )
            manifest = served
        else:
            builtin_id = backend_spec.split(":", 1)[1] if ":" in backend_spec else backend_spec
            backend = builtin_backend(builtin_id)
            if manifest is not None and manifest.vector_dim != backend.manifest.vector_dim:
                raise ValidationError(
                    f"builtin {builtin_id!r} has dim {backend.manifest.vector_dim}, "
                    f"registration requested dim {manifest.vector_dim}"
                )
            manifest = backend.manifest
        with self._lock:
            existing = self._plugins.get(manifest.name)
            if existing is not None and existing.manifest.vector_dim != manifest.vector_dim:
                raise ValidationError(
                    f"plugin {manifest.name!r} already registered with dim "
                    f"{existing.manifest.vector_dim}, cannot re-register with dim {manifest.vector_dim}"
                )
            self._plugins[manifest.name] = _Registered(manifest, backend)
        return manifest

    def register_builtins(self, names: list[str] | None = None) -> list[PluginManifest]:
        return [self.register_plugin(f"builtin:{n}") for n in (names or sorted(BUILTIN_BACKENDS))]

    def list_plugins(self) -> list[PluginManifest]:
        with self._lock:
            return [self._plugins[n].manifest for n in sorted(self._plugins)]

    def manifest(self, name: str) -> PluginManifest:
        with self._lock:
            reg = self._plugins.get(name)
        if reg is None:
            raise ValidationError(f"plugin {name!r} is not registered")
        return reg.manifest

    def has(self, name: str) -> bool:
        with self._lock:
            return name in self._plugins

    def feature_plugins(self) -> list[PluginManifest]:
        return [m for m in self.list_plugins() if m.kind == FEATURE]

    # -- extraction -------------------------------------------------------

    def extract(self, name: str, inputs: list[ExtractionInput]) -> list[ExtractionItem]:
        """Batch extraction with per-item errors and cache hits.

        Order is preserved; undecodable images fail individually without
        failing the batch. Raises ValidationError if any input's modality is
        unsupported by the plugin (a caller bug, not a data error).
        """
        reg = self._registered(name)
        man = reg.manifest
        for i, inp in enumerate(inputs):
            if inp.kind not in man.modalities:
                raise ValidationError(
                    f"plugin {name!r} does not support {inp.kind!r} inputs",
                    detail={"input_index": i},
                )
        results: list[ExtractionItem | None] = [None] * len(inputs)
        pending: list[int] = []
        for i, inp in enumerate(inputs):
            key = (man.name, man.version, inp.content_hash())
            with self._lock:
                hit = self._cache.get(key)
            if hit is not None:
                results[i] = ExtractionItem(vector=hit.vector, labels=hit.labels, cached=True)
                continue
            if inp.kind == IMAGE:
                try:
                    inp.image_array()
                except ValidationError as exc:
                    results[i] = ExtractionItem(error=exc.message)
                    continue
            pending.append(i)
        if pending:
            batch = [inputs[i] for i in pending]
            items = reg.backend.extract_batch(batch)
            if len(items) != len(batch):
                raise ValidationError(f"backend for {name!r} returned a mismatched batch")
            with self._lock:
                self.backend_calls[name] = self.backend_calls.get(name, 0) + len(batch)
            for i, item in zip(pending, items):
                if item.ok and item.vector is not None and man.kind == FEATURE:
                    item.vector = self._check_vector(man, item.vector)
                if item.ok:
                    self._cache_store((man.name, man.version, inputs[i].content_hash()), item)
                results[i] = item
        return [r if r is not None else ExtractionItem(error="internal: missing result")
                for r in results]

    def extract_vectors(self, name: str, inputs: list[ExtractionInput]) -> list[np.ndarray]:
        """Extraction that requires every item to succeed; returns vectors only."""
        items = self.extract(name, inputs)
        vectors = []
        for i, item in enumerate(items):
            if not item.ok:
                raise ValidationError(
                    f"extraction failed for input {i}: {item.error}",
                    detail={"input_index": i},
                )
            if item.vector is None:
                raise ValidationError(f"plugin {name!r} produced no vector for input {i}")
            vectors.append(item.vector)
        return vectors

    def classify(self, name: str, inp: ExtractionInput) -> ClassifierOutput:
        """Run a classifier plugin on one input."""
        reg = self._registered(name)
        if reg.manifest.kind != CLASSIFIER:
            raise ValidationError(f"plugin {name!r} is not a classifier (kind={reg.manifest.kind})")
        item = self.extract(name, [inp])[0]
        if not item.ok:
            raise ValidationError(f"classification failed: {item.error}")
        taxonomy = getattr(reg.backend, "taxonomy", reg.manifest.name)
        return ClassifierOutput(labels=item.labels or [], taxonomy=taxonomy)

    # -- internals ---------------------------------------------------------

    def _registered(self, name: str) -> _Registered:
        with self._lock:
            reg = self._plugins.get(name)
        if reg is None:
            raise ValidationError(f"plugin {name!r} is not registered")
        return reg

    @staticmethod
    def _check_vector(man: PluginManifest, vector: np.ndarray) -> np.ndarray:
        v = np.asarray(vector, dtype=np.float32)
        if v.shape != (man.vector_dim,):
            raise ValidationError(
                f"plugin {man.name!r} emitted shape {v.shape}, expected ({man.vector_dim},)"
            )
        norm = float(np.linalg.norm(v.astype(np.float64)))
        if norm < 1e-12:
            raise ValidationError(f"plugin {man.name!r} emitted a zero vector")
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            # Normalize only when out of tolerance, so unit vectors keep
            # their exact bits across the wire (round-trip identity).
            v = (v.astype(np.float64) / norm).astype(np.float32)
        return v

    def _cache_store(self, key: tuple[str, str, str], item: ExtractionItem) -> None:
        with self._lock:
            self._cache[key] = ExtractionItem(vector=item.vector, labels=item.labels)
            if self._cache_log is not None:
                record = {
                    "plugin": key[0],
                    "version": key[1],
                    "content": key[2],
                    "vector": None if item.vector is None else [float(x) for x in item.vector],
                    "labels": item.labels,
                }
                self._cache_log.write(json.dumps(record) + "\n")
                self._cache_log.flush()

    def _load_cache(self) -> None:
        if not self._cache_path.exists():
            return
        with open(self._cache_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn tail; cache is best-effort
                vec = rec.get("vector")
                labels = rec.get("labels")
                self._cache[(rec["plugin"], rec["version"], rec["content"])] = ExtractionItem(
                    vector=None if vec is None else np.asarray(vec, dtype=np.float32),
                    labels=None if labels is None else [(k, float(c)) for k, c in labels],
                )

    def close(self) -> None:
        with self._lock:
            if self._cache_log is not None and not self._cache_log.closed:
                self._cache_log.close()
            for reg in self._plugins.values():
                close = getattr(reg.backend, "close", None)
                if close:
                    close()
