"""Workspace: one data directory wiring catalog, registry, indexes, jobs.

Layout under the data directory::

    catalog/            document store (see catalog.store)
    indexes/<plugin>.vec  per-plugin vector index files
    cache/extract.jsonl   extraction cache (content-hash keyed)

A single lock makes entry commits atomic with respect to query snapshots:
a document is never observable with only part of its requested vectors.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import Catalog, CatalogView, FacetDefinition
from .catalog.types import ImageDocument
from .errors import ValidationError
from .index import FlatIndex, HnswIndex, load_index, make_index, save_index
from .ingest import Ingestor, JobTracker
from .plugins.base import FEATURE, PluginManifest
from .plugins.registry import PluginRegistry
from .query.engine import QueryEngine
from .query.spec import QuerySpec, ResultPage


class Workspace:
    def __init__(self, data_dir: str | Path, facets: Sequence[FacetDefinition] = (),
                 index_structure: str = "flat", index_params: dict | None = None,
                 per_plugin_index: dict | None = None,
                 retry_attempts: int = 3, retry_base_delay: float = 0.2):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        facets = self._persist_facets(facets)
        self.catalog = Catalog(self.data_dir / "catalog", facets)
        self.registry = PluginRegistry(cache_path=self.data_dir / "cache" / "extract.jsonl")
        self.jobs = JobTracker()
        self.indexes: dict[str, FlatIndex | HnswIndex] = {}
        self._index_structure = index_structure
        self._index_params = index_params or {}
        self._per_plugin_index = per_plugin_index or {}
        self._lock = threading.RLock()
        self.engine = QueryEngine(self, self.registry, self.indexes)
        self.ingestor = Ingestor(self, self.jobs, retry_attempts=retry_attempts,
                                 retry_base_delay=retry_base_delay)

    def _persist_facets(self, facets: Sequence[FacetDefinition]) -> list[FacetDefinition]:
        """Remember facet definitions in the data dir so reopening a
        workspace without repeating them keeps the facet indexes."""
        import json

        path = self.data_dir / "facets.json"
        if facets:
            path.write_text(json.dumps(
                {"facets": [f.to_json() for f in facets]}, indent=2), encoding="utf-8")
            return list(facets)
        if path.exists():
            data = json.loads(path.read_text(encoding="utf-8"))
            return [FacetDefinition.from_json(f) for f in data.get("facets", [])]
        return []

    # -- plugins / indexes ------------------------------------------------

    def register_plugin(self, backend_spec: str, manifest: PluginManifest | None = None,
                        **kwargs) -> PluginManifest:
        man = self.registry.register_plugin(backend_spec, manifest, **kwargs)
        if man.kind == FEATURE:
            self._ensure_index(man)
        return man

    def register_builtins(self, names: list[str] | None = None) -> list[PluginManifest]:
        return [self.register_plugin(f"builtin:{n}")
                for n in (names or ["colorgram", "hashproj", "red-threshold"])]

    def _index_path(self, plugin: str) -> Path:
        return self.data_dir / "indexes" / f"{plugin}.vec"

    def _ensure_index(self, man: PluginManifest) -> None:
        with self._lock:
            if man.name in self.indexes:
                return
            path = self._index_path(man.name)
            if path.exists():
                index = load_index(path)
                if index.dim != man.vector_dim:
                    raise ValidationError(
                        f"persisted index for {man.name!r} has dim {index.dim}, "
                        f"plugin declares {man.vector_dim}")
            else:
                cfg = self._per_plugin_index.get(man.name, {})
                structure = cfg.get("structure", self._index_structure)
                params = {**self._index_params, **cfg.get("params", {})}
                index = make_index(structure, man.vector_dim, man.name, **params)
            self.indexes[man.name] = index

    # -- commits / snapshots -------------------------------------------------

    def commit_entry(self, doc: ImageDocument, vectors: dict[str, np.ndarray]) -> None:
        """Atomically upsert a document plus all its plugin vectors."""
        for plugin in vectors:
            if plugin not in self.indexes:
                raise ValidationError(f"no index for plugin {plugin!r}")
        with self._lock:
            self.catalog.upsert_document(doc)
            for plugin, vec in vectors.items():
                self.indexes[plugin].insert(doc.doc_id, vec)

    def snapshot(self) -> CatalogView:
        with self._lock:
            return self.catalog.snapshot()

    # -- queries ----------------------------------------------------------------

    def search(self, spec: QuerySpec) -> ResultPage:
        facet_fields = [f.field for f in self.catalog.facets()]
        return self.engine.execute(spec, facet_fields=facet_fields)

    def explain(self, spec: QuerySpec, doc_id: str) -> dict:
        return self.engine.explain(spec, doc_id)

    # -- ingestion ----------------------------------------------------------------

    def ingest(self, manifest, collection_id: str, plugins: list[str],
               parallelism: int = 1, image_root=None):
        return self.ingestor.run(manifest, collection_id, plugins,
                                 parallelism=parallelism, image_root=image_root)

    def start_ingest(self, manifest, collection_id: str, plugins: list[str],
                     parallelism: int = 1, image_root=None):
        return self.ingestor.start(manifest, collection_id, plugins,
                                   parallelism=parallelism, image_root=image_root)

    # -- lifecycle ----------------------------------------------------------------

    def flush(self) -> None:
        with self._lock:
            for plugin, index in self.indexes.items():
                save_index(index, self._index_path(plugin))

    def close(self) -> None:
        self.flush()
        self.registry.close()
        self.catalog.close()

    def __enter__(self) -> "Workspace":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
