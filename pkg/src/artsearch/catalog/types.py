"""Catalog domain types: documents, facet definitions, facet filters."""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass, field

from ..errors import ValidationError

_DOC_ID_RE = re.compile(r"^\S{1,128}$")

CATEGORICAL = "categorical"
NUMERIC_YEAR = "numeric-year"

_YEAR_RE = re.compile(r"^[+-]?\d+$")


def parse_year(value: str) -> int | None:
    """Parse a metadata value as a signed integer year; None if unparseable.

    Negative years (BCE) are valid. Unparseable values are excluded from the
    facet only, never from the document.
    """
    text = value.strip()
    if not _YEAR_RE.match(text):
        return None
    try:
        return int(text)
    except ValueError:  # pragma: no cover - regex already guards
        return None


def normalize_metadata(metadata: dict) -> dict[str, list[str]]:
    """Lowercase field names, stringify scalar values, drop duplicate values.

    Value order is preserved (first occurrence wins) so re-serialization is
    stable. Nested structures are rejected.
    """
    out: dict[str, list[str]] = {}
    for raw_field, raw_values in metadata.items():
        if not isinstance(raw_field, str) or not raw_field.strip():
            raise ValidationError("metadata field names must be non-empty strings")
        fname = raw_field.strip().casefold()
        if isinstance(raw_values, (str, int, float, bool)):
            raw_values = [raw_values]
        if not isinstance(raw_values, (list, tuple)):
            raise ValidationError(
                f"metadata field {fname!r} must hold a list of values",
                detail={"field": fname},
            )
        seen: list[str] = []
        for v in raw_values:
            if isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, (int, float)):
                v = repr(v) if isinstance(v, float) else str(v)
            if not isinstance(v, str):
                raise ValidationError(
                    f"metadata values for {fname!r} must be strings or numbers",
                    detail={"field": fname},
                )
            if v not in seen:
                seen.append(v)
        existing = out.setdefault(fname, [])
        for v in seen:
            if v not in existing:
                existing.append(v)
    return out


@dataclass
class ImageDocument:
    """One catalogued artwork: image reference plus facet/search metadata."""

    doc_id: str
    collection_id: str
    image_ref: str
    title: str | None = None
    metadata: dict[str, list[str]] = field(default_factory=dict)
    ingested_at: dt.datetime | None = None

    def __post_init__(self):
        if not isinstance(self.doc_id, str) or not _DOC_ID_RE.match(self.doc_id):
            raise ValidationError(
                "doc_id must be 1-128 non-whitespace characters",
                detail={"doc_id": str(self.doc_id)[:160]},
            )
        if not isinstance(self.collection_id, str) or not self.collection_id:
            raise ValidationError("collection_id must be a non-empty string")
        self.metadata = normalize_metadata(self.metadata)
        if self.ingested_at is None:
            self.ingested_at = dt.datetime.now(dt.timezone.utc)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "collection_id": self.collection_id,
            "image_ref": self.image_ref,
            "title": self.title,
            "metadata": self.metadata,
            "ingested_at": self.ingested_at.isoformat(),
        }

    @classmethod
    def from_record(cls, record: dict) -> "ImageDocument":
        return cls(
            doc_id=record["doc_id"],
            collection_id=record["collection_id"],
            image_ref=record.get("image_ref", ""),
            title=record.get("title"),
            metadata=record.get("metadata", {}),
            ingested_at=dt.datetime.fromisoformat(record["ingested_at"]),
        )

    def search_text(self) -> str:
        """Text seen by the keyword index: title plus flattened metadata values."""
        parts: list[str] = []
        if self.title:
            parts.append(self.title)
        for fname in sorted(self.metadata):
            parts.extend(self.metadata[fname])
        return " ".join(parts)


@dataclass(frozen=True)
class FacetDefinition:
    """A metadata field exposed for filtering and value counting."""

    field: str
    kind: str = CATEGORICAL
    display_name: str = ""

    def __post_init__(self):
        if not self.field or not isinstance(self.field, str):
            raise ValidationError("facet field must be a non-empty string")
        object.__setattr__(self, "field", self.field.strip().casefold())
        if self.kind not in (CATEGORICAL, NUMERIC_YEAR):
            raise ValidationError(
                f"facet kind must be {CATEGORICAL!r} or {NUMERIC_YEAR!r}, got {self.kind!r}"
            )
        if not self.display_name:
            object.__setattr__(self, "display_name", self.field)

    def to_json(self) -> dict:
        return {"field": self.field, "kind": self.kind, "display_name": self.display_name}

    @classmethod
    def from_json(cls, data: dict) -> "FacetDefinition":
        return cls(
            field=data.get("field", ""),
            kind=data.get("kind", CATEGORICAL),
            display_name=data.get("display_name", ""),
        )


@dataclass(frozen=True)
class FacetFilter:
    """One conjunct of a filter set.

    A document matches when at least one of its values for ``field`` is
    accepted (OR within the filter); a filter set matches when every filter
    matches (AND across filters). ``values`` applies to categorical facets,
    ``year_range`` (inclusive) to numeric-year facets.
    """

    field: str
    values: tuple[str, ...] | None = None
    year_range: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.field or not isinstance(self.field, str):
            raise ValidationError("filter field must be a non-empty string")
        object.__setattr__(self, "field", self.field.strip().casefold())
        if (self.values is None) == (self.year_range is None):
            raise ValidationError(
                "filter must set exactly one of 'values' or 'range'",
                detail={"field": self.field},
            )
        if self.values is not None:
            vals = tuple(str(v) for v in self.values)
            if not vals:
                raise ValidationError(
                    "filter values list must be non-empty", detail={"field": self.field}
                )
            object.__setattr__(self, "values", vals)
        if self.year_range is not None:
            lo, hi = self.year_range
            try:
                lo, hi = int(lo), int(hi)
            except (TypeError, ValueError):
                raise ValidationError(
                    "year range bounds must be integers", detail={"field": self.field}
                ) from None
            if lo > hi:
                raise ValidationError(
                    f"year range lower bound {lo} exceeds upper bound {hi}",
                    detail={"field": self.field},
                )
            object.__setattr__(self, "year_range", (lo, hi))

    def to_json(self) -> dict:
        if self.values is not None:
            return {"field": self.field, "values": list(self.values)}
        return {"field": self.field, "range": list(self.year_range)}

    @classmethod
    def from_json(cls, data: dict) -> "FacetFilter":
        if not isinstance(data, dict):
            raise ValidationError("filter must be an object")
        return cls(
            field=data.get("field", ""),
            values=tuple(data["values"]) if "values" in data else None,
            year_range=tuple(data["range"]) if "range" in data else None,
        )
