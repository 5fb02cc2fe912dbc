"""Retrieval core: weighted multi-reference fusion, per-plugin scoring,
filter intersection, ranking, pagination, and layout delegation.

Scoring contract (also the contract for the test oracles):

* fused vector per plugin = sum of weight * embedding over the terms the
  plugin supports, L2-normalized (float64 accumulation); absent when no
  term is supported or the norm is below 1e-8.
* per-plugin score(d) = clip((1 + cos(fused, v_d)) / 2, 0, 1) with cos the
  float64 inner product; docs without a vector for the plugin score 0 and
  are flagged "uncovered".
* final_score(d) = sum_p W_p * score_p(d) / sum_p W_p over plugins with a
  fused vector; ordering is final_score desc, doc_id asc.
* keyword_query acts as a hard candidate constraint. When no plugin has a
  fused vector and keyword_query is present, results fall back to pure
  keyword ranking with final_score = score / max_score (per_plugin empty,
  diagnostics.fallback = "keyword").

Candidate-set truncation (top K_p per plugin, K_p = max(4 * limit *
(offset//limit + 1), 200)) is the only sanctioned approximation: with flat
indexes and K_p >= corpus size, execute matches the brute-force pipeline
exactly.
"""

from __future__ import annotations

import numpy as np

from ..analytics import default_cluster_count, kmeans, neighbor_embed_2d, pca2d
from ..catalog.store import CatalogView
from ..catalog.types import FacetFilter
from ..errors import NotFoundError, ValidationError
from ..plugins.base import IMAGE, TEXT, ExtractionInput, PluginManifest
from ..plugins.registry import PluginRegistry
from ..query.spec import (
    CANVAS,
    CLUSTERS,
    LAYOUT_CAP,
    QuerySpec,
    QueryTerm,
    ResultEntry,
    ResultPage,
)

_FUSE_NORM_FLOOR = 1e-8
_UNCOVERED_SAMPLE = 20


class QueryEngine:
    """Read-only retrieval over a catalog, registry, and per-plugin indexes."""

    def __init__(self, catalog, registry: PluginRegistry, indexes: dict):
        self.catalog = catalog
        self.registry = registry
        self.indexes = indexes

    # -- fusion ----------------------------------------------------------

    def fuse_terms(self, plugin: str, terms: list[QueryTerm],
                   warnings: list[str] | None = None) -> np.ndarray | None:
        """Weighted sum of supported term embeddings, unit-normalized.

        Returns None ("absent") when no term is supported by the plugin or
        the weighted sum collapses below the norm floor; per-term embedding
        failures are recorded as warnings and skip the term.
        """
        man = self.registry.manifest(plugin)
        index = self.indexes.get(plugin)
        acc = np.zeros(man.vector_dim, dtype=np.float64)
        supported = False
        for i, term in enumerate(terms):
            vec = self._embed_term(man, index, term, i, warnings)
            if vec is None:
                continue
            supported = True
            acc += term.weight * vec.astype(np.float64)
        if not supported:
            return None
        norm = float(np.linalg.norm(acc))
        if norm < _FUSE_NORM_FLOOR:
            return None
        return (acc / norm).astype(np.float32)

    def _embed_term(self, man: PluginManifest, index, term: QueryTerm,
                    term_index: int, warnings: list[str] | None) -> np.ndarray | None:
        if term.kind == "text":
            if TEXT not in man.modalities:
                return None
            inp = ExtractionInput.text(term.text)
        elif term.kind == "image":
            if IMAGE not in man.modalities:
                return None
            inp = ExtractionInput.image(term.image)
        else:
            if index is None or term.doc_id not in index:
                return None
            return index.vector(term.doc_id)
        item = self.registry.extract(man.name, [inp])[0]
        if not item.ok or item.vector is None:
            if warnings is not None:
                warnings.append(
                    f"term {term_index}: embedding failed for plugin "
                    f"{man.name!r}: {item.error or 'no vector'}"
                )
            return None
        return item.vector

    # -- scoring -----------------------------------------------------------

    def score_plugin(self, plugin: str, fused: np.ndarray,
                     candidates: list[str]) -> tuple[dict[str, float], list[str]]:
        """Exact per-candidate scores; returns (scores, uncovered ids)."""
        index = self.indexes.get(plugin)
        scores: dict[str, float] = {}
        uncovered: list[str] = []
        covered_ids = []
        covered_vecs = []
        for doc_id in candidates:
            if index is not None and doc_id in index:
                covered_ids.append(doc_id)
                covered_vecs.append(index.vector(doc_id))
            else:
                scores[doc_id] = 0.0
                uncovered.append(doc_id)
        if covered_ids:
            mat = np.asarray(covered_vecs, dtype=np.float64)
            sims = mat @ fused.astype(np.float64)
            for doc_id, sim in zip(covered_ids, sims):
                scores[doc_id] = float(np.clip((1.0 + sim) / 2.0, 0.0, 1.0))
        return scores, uncovered

    def _effective_weights(self, spec: QuerySpec) -> dict[str, float]:
        feature_names = {m.name for m in self.registry.feature_plugins()}
        if spec.plugin_weights is None:
            weights = {name: 1.0 for name in feature_names}
        else:
            weights = {}
            for name, w in spec.plugin_weights.items():
                if name not in feature_names:
                    raise ValidationError(
                        f"{name!r} is not a registered feature plugin",
                        detail={"plugin": name},
                    )
                if w > 0:
                    weights[name] = w
        if not weights or sum(weights.values()) <= 0:
            raise ValidationError("no plugin has a positive weight")
        return weights

    # -- execution -----------------------------------------------------------

    def execute(self, spec: QuerySpec, facet_fields: list[str] | None = None) -> ResultPage:
        snapshot: CatalogView = self.catalog.snapshot()
        for term in spec.terms:
            if term.doc_id is not None and not snapshot.has(term.doc_id):
                raise ValidationError(
                    f"term references unknown document {term.doc_id!r}",
                    detail={"doc_id": term.doc_id},
                )
        weights = self._effective_weights(spec)
        diagnostics: dict = {"warnings": [], "fused": {}, "uncovered": {}, "fallback": None}

        candidates = snapshot.match_set(spec.filters)
        kw_scores: dict[str, float] | None = None
        if spec.keyword_query is not None and spec.keyword_query.strip():
            hits = snapshot.keyword_search(
                spec.keyword_query, [], limit=max(1, len(snapshot)))
            kw_scores = dict(hits)
            candidates = [d for d in candidates if d in kw_scores]

        fused: dict[str, np.ndarray] = {}
        for plugin in sorted(weights):
            vec = self.fuse_terms(plugin, spec.terms, diagnostics["warnings"])
            diagnostics["fused"][plugin] = vec is not None
            if vec is not None:
                fused[plugin] = vec

        facet_counts = self._facet_counts(snapshot, candidates, facet_fields)
        if not candidates:
            return ResultPage(total=0, results=[], diagnostics=diagnostics,
                              facet_counts=facet_counts, layout=None)

        if not fused:
            if kw_scores is not None:
                return self._keyword_fallback(
                    spec, snapshot, candidates, kw_scores, diagnostics, facet_counts)
            raise ValidationError("no scorable plug-in for this query")

        depth = max(4 * spec.limit * (spec.offset // spec.limit + 1), 200)
        scored_set: set[str] = set()
        for plugin in sorted(fused):
            index = self.indexes.get(plugin)
            if index is None or len(index) == 0:
                continue
            for nb in index.search(fused[plugin], k=depth, allowed=candidates):
                scored_set.add(nb.doc_id)
        ordered_ids = sorted(scored_set)

        per_plugin: dict[str, dict[str, float]] = {}
        for plugin in sorted(fused):
            scores, uncovered = self.score_plugin(plugin, fused[plugin], ordered_ids)
            per_plugin[plugin] = scores
            if uncovered:
                diagnostics["uncovered"][plugin] = {
                    "count": len(uncovered),
                    "sample": uncovered[:_UNCOVERED_SAMPLE],
                }

        weight_total = sum(weights[p] for p in fused)
        entries = []
        for doc_id in ordered_ids:
            final = sum(weights[p] * per_plugin[p][doc_id] for p in fused) / weight_total
            entries.append((doc_id, final))
        entries.sort(key=lambda pair: (-pair[1], pair[0]))

        results = [
            ResultEntry(
                doc_id=doc_id,
                final_score=final,
                rank=rank,
                per_plugin={p: per_plugin[p][doc_id] for p in sorted(fused)},
            )
            for rank, (doc_id, final) in enumerate(entries, start=1)
        ]
        layout_payload = self._apply_layout(spec, results, fused, weights, diagnostics)
        page = results[spec.offset : spec.offset + spec.limit]
        return ResultPage(total=len(results), results=page, diagnostics=diagnostics,
                          facet_counts=facet_counts, layout=layout_payload)

    def _keyword_fallback(self, spec, snapshot, candidates, kw_scores,
                          diagnostics, facet_counts) -> ResultPage:
        diagnostics["fallback"] = "keyword"
        max_score = max(kw_scores[d] for d in candidates)
        scored = [(d, (kw_scores[d] / max_score) if max_score > 0 else 0.0)
                  for d in candidates]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        results = [
            ResultEntry(doc_id=d, final_score=s, rank=i, per_plugin={})
            for i, (d, s) in enumerate(scored, start=1)
        ]
        page = results[spec.offset : spec.offset + spec.limit]
        return ResultPage(total=len(results), results=page, diagnostics=diagnostics,
                          facet_counts=facet_counts, layout=None)

    def _facet_counts(self, snapshot, candidates, facet_fields) -> dict:
        counts = {}
        for field in facet_fields or []:
            raw = snapshot.facet_counts_over(candidates, field)
            counts[field] = {str(v): raw[v] for v in sorted(raw, key=lambda x: str(x))}
        return counts

    # -- layout ---------------------------------------------------------------

    def _layout_plugin(self, fused: dict, weights: dict) -> str:
        """Embedding source for layouts: largest weight, ties alphabetical."""
        return min(fused, key=lambda p: (-weights[p], p))

    def _apply_layout(self, spec: QuerySpec, results: list[ResultEntry],
                      fused: dict, weights: dict, diagnostics: dict) -> dict | None:
        mode = spec.layout.mode
        if mode not in (CLUSTERS, CANVAS) or not results:
            return None
        plugin = self._layout_plugin(fused, weights)
        index = self.indexes.get(plugin)
        top = results[:LAYOUT_CAP]
        vectors: dict[str, np.ndarray] = {}
        missing: list[str] = []
        for entry in top:
            if index is not None and entry.doc_id in index:
                vectors[entry.doc_id] = index.vector(entry.doc_id)
            else:
                missing.append(entry.doc_id)
        if not vectors:
            diagnostics["warnings"].append(
                f"layout skipped: no vectors for plugin {plugin!r}")
            return None
        if mode == CLUSTERS:
            k = spec.layout.k or default_cluster_count(len(vectors))
            k = min(k, len(vectors))
            result = kmeans(vectors, k, seed=spec.layout.seed)
            for entry in top:
                entry.cluster_id = result.assignments.get(entry.doc_id)
            return {
                "mode": CLUSTERS,
                "plugin": plugin,
                "k": k,
                "sse": result.sse,
                "clusters": {d: result.assignments[d] for d in sorted(result.assignments)},
                "missing": missing,
            }
        minimum = max(spec.layout.n_neighbors + 1, 10)
        if len(vectors) == 1:
            proj_coords = {next(iter(vectors)): (0.0, 0.0)}
            method = "pca"
        elif len(vectors) < minimum:
            diagnostics["warnings"].append(
                f"canvas layout fell back to pca ({len(vectors)} points "
                f"< minimum {minimum} for neighbor embedding)")
            proj = pca2d(vectors)
            proj_coords = proj.coords
            method = proj.method
        else:
            proj = neighbor_embed_2d(
                vectors, n_neighbors=spec.layout.n_neighbors,
                min_dist=spec.layout.min_dist, epochs=spec.layout.epochs,
                seed=spec.layout.seed)
            proj_coords = proj.coords
            method = proj.method
        for entry in top:
            if entry.doc_id in proj_coords:
                entry.coords2d = proj_coords[entry.doc_id]
        return {
            "mode": CANVAS,
            "plugin": plugin,
            "method": method,
            "coords": {d: list(proj_coords[d]) for d in sorted(proj_coords)},
            "missing": missing,
        }

    # -- explain ----------------------------------------------------------------

    def explain(self, spec: QuerySpec, doc_id: str) -> dict:
        """Per-plugin breakdown for one document under a spec."""
        snapshot: CatalogView = self.catalog.snapshot()
        if not snapshot.has(doc_id):
            raise NotFoundError(f"document {doc_id!r} not found")
        weights = self._effective_weights(spec)
        warnings: list[str] = []
        fused_flags: dict[str, bool] = {}
        per_plugin: dict[str, float] = {}
        uncovered: list[str] = []
        numer = 0.0
        denom = 0.0
        for plugin in sorted(weights):
            vec = self.fuse_terms(plugin, spec.terms, warnings)
            fused_flags[plugin] = vec is not None
            if vec is None:
                continue
            scores, missing = self.score_plugin(plugin, vec, [doc_id])
            per_plugin[plugin] = scores[doc_id]
            if missing:
                uncovered.append(plugin)
            numer += weights[plugin] * scores[doc_id]
            denom += weights[plugin]
        filter_checks = [
            {"filter": f.to_json(), "passed": self._doc_passes(snapshot, doc_id, f)}
            for f in spec.filters
        ]
        keyword_match = None
        if spec.keyword_query is not None and spec.keyword_query.strip():
            hits = snapshot.keyword_search(spec.keyword_query, [], limit=max(1, len(snapshot)))
            keyword_match = doc_id in dict(hits)
        return {
            "doc_id": doc_id,
            "final_score": (numer / denom) if denom > 0 else None,
            "per_plugin": per_plugin,
            "fused": fused_flags,
            "uncovered_plugins": uncovered,
            "filters": filter_checks,
            "keyword_match": keyword_match,
            "warnings": warnings,
        }

    @staticmethod
    def _doc_passes(snapshot: CatalogView, doc_id: str, flt: FacetFilter) -> bool:
        return doc_id in set(snapshot.match_set([flt]))
