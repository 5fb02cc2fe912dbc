"""Query domain types: terms, spec, result entries and pages.

The JSON forms here are the shared contract between the HTTP service, the
CLI, and the browser UI; the committed JSON schema mirrors them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..catalog.types import FacetFilter
from ..errors import ValidationError

MAX_PAGE_LIMIT = 500
MAX_TERM_WEIGHT = 4.0
LAYOUT_CAP = 1000

GRID = "grid"
CLUSTERS = "clusters"
CANVAS = "canvas"


@dataclass
class QueryTerm:
    """One weighted reference: free text, image bytes, or an existing doc."""

    text: str | None = None
    image: bytes | None = None
    doc_id: str | None = None
    weight: float = 1.0

    def __post_init__(self):
        sources = [s is not None for s in (self.text, self.image, self.doc_id)]
        if sum(sources) != 1:
            raise ValidationError("term must set exactly one of text, image, doc_id")
        self.weight = float(self.weight)
        if not -MAX_TERM_WEIGHT <= self.weight <= MAX_TERM_WEIGHT:
            raise ValidationError(
                f"term weight {self.weight} outside [-{MAX_TERM_WEIGHT}, {MAX_TERM_WEIGHT}]"
            )
        if self.text is not None and not self.text.strip():
            raise ValidationError("text term is empty")

    @property
    def kind(self) -> str:
        if self.text is not None:
            return "text"
        if self.image is not None:
            return "image"
        return "doc"


@dataclass
class LayoutSpec:
    """Requested result layout; clusters and canvas add analytics payload."""

    mode: str = GRID
    k: int | None = None
    n_neighbors: int = 15
    min_dist: float = 0.1
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (GRID, CLUSTERS, CANVAS):
            raise ValidationError(f"layout mode must be grid|clusters|canvas, got {self.mode!r}")
        if self.k is not None and self.k < 1:
            raise ValidationError("layout k must be >= 1")

    def to_json(self) -> dict:
        out: dict = {"mode": self.mode}
        if self.mode == CLUSTERS:
            if self.k is not None:
                out["k"] = self.k
            out["seed"] = self.seed
        elif self.mode == CANVAS:
            out.update({"n_neighbors": self.n_neighbors, "min_dist": self.min_dist,
                        "epochs": self.epochs, "seed": self.seed})
        return out

    @classmethod
    def from_json(cls, data: dict | None) -> "LayoutSpec":
        if data is None:
            return cls()
        return cls(
            mode=data.get("mode", GRID),
            k=data.get("k"),
            n_neighbors=int(data.get("n_neighbors", 15)),
            min_dist=float(data.get("min_dist", 0.1)),
            epochs=int(data.get("epochs", 200)),
            seed=int(data.get("seed", 0)),
        )


@dataclass
class QuerySpec:
    """A full search request.

    ``plugin_weights`` semantics: when omitted entirely, every feature
    plugin defaults to weight 1.0; when given, unlisted plugins are
    excluded (weight 0), so ``{"A": 1}`` and ``{"A": 1, "B": 0}`` rank
    identically.
    """

    terms: list[QueryTerm]
    plugin_weights: dict[str, float] | None = None
    filters: list[FacetFilter] = field(default_factory=list)
    keyword_query: str | None = None
    offset: int = 0
    limit: int = 50
    layout: LayoutSpec = field(default_factory=LayoutSpec)

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("query needs at least one term")
        if not any(t.weight > 0 for t in self.terms):
            raise ValidationError("at least one term must have weight > 0")
        if self.plugin_weights is not None:
            for name, w in self.plugin_weights.items():
                if float(w) < 0:
                    raise ValidationError(
                        f"plugin weight for {name!r} must be >= 0", detail={"plugin": name}
                    )
            self.plugin_weights = {n: float(w) for n, w in self.plugin_weights.items()}
        self.offset = int(self.offset)
        self.limit = int(self.limit)
        if self.offset < 0:
            raise ValidationError("page offset must be >= 0")
        if not 1 <= self.limit <= MAX_PAGE_LIMIT:
            raise ValidationError(f"page limit must be in [1, {MAX_PAGE_LIMIT}]")

    @classmethod
    def from_json(cls, data: dict,
                  resolve_upload: Callable[[str], bytes] | None = None) -> "QuerySpec":
        """Build a spec from the wire form.

        Image terms arrive as ``{"image_token": ...}``; ``resolve_upload``
        maps a token to image bytes (the service's upload store).
        """
        if not isinstance(data, dict):
            raise ValidationError("query spec must be an object")
        terms = []
        for i, t in enumerate(data.get("terms", [])):
            if not isinstance(t, dict):
                raise ValidationError(f"term {i} must be an object")
            weight = t.get("weight", 1.0)
            if "text" in t:
                terms.append(QueryTerm(text=t["text"], weight=weight))
            elif "doc_id" in t:
                terms.append(QueryTerm(doc_id=t["doc_id"], weight=weight))
            elif "image_token" in t:
                if resolve_upload is None:
                    raise ValidationError(
                        "image term by token is not supported in this context",
                        detail={"term_index": i},
                    )
                try:
                    image = resolve_upload(t["image_token"])
                except ValidationError as exc:
                    raise ValidationError(
                        f"term {i}: {exc.message}",
                        detail={"term_index": i, "pointer": f"/terms/{i}/image_token"},
                    ) from exc
                terms.append(QueryTerm(image=image, weight=weight))
            else:
                raise ValidationError(
                    f"term {i} must carry text, doc_id, or image_token",
                    detail={"term_index": i},
                )
        filters = [FacetFilter.from_json(f) for f in data.get("filters", [])]
        page = data.get("page", {})
        return cls(
            terms=terms,
            plugin_weights=data.get("plugin_weights"),
            filters=filters,
            keyword_query=data.get("keyword_query"),
            offset=page.get("offset", 0),
            limit=page.get("limit", 50),
            layout=LayoutSpec.from_json(data.get("layout")),
        )


@dataclass
class ResultEntry:
    doc_id: str
    final_score: float
    rank: int
    per_plugin: dict[str, float]
    cluster_id: int | None = None
    coords2d: tuple[float, float] | None = None

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "final_score": self.final_score,
            "rank": self.rank,
            "per_plugin": {k: self.per_plugin[k] for k in sorted(self.per_plugin)},
            "cluster_id": self.cluster_id,
            "coords2d": None if self.coords2d is None else list(self.coords2d),
        }


@dataclass
class ResultPage:
    total: int
    results: list[ResultEntry]
    diagnostics: dict
    facet_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    layout: dict | None = None

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "results": [r.to_json() for r in self.results],
            "diagnostics": self.diagnostics,
            "facet_counts": self.facet_counts,
            "layout": self.layout,
        }
