"""Persistent document store with keyword and facet indexes.

Layout of a catalog directory::

    header          magic "IARTCAT1" + JSON version record
    documents.log   JSON-Lines, one full document per upsert (last write wins)

The log is the single source of truth; every index is rebuilt by replay on
open. Appends are flushed and fsynced before an upsert is acknowledged, and
in-memory indexes are only touched after the append succeeded, so readers
never observe a partial update. A torn trailing line (crash mid-append) is
detected on open and truncated away.
"""

from __future__ import annotations

import io
import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import FormatError, NotFoundError, StorageError, ValidationError
from ..textutil import token_counts, tokenize
from .types import (
    CATEGORICAL,
    NUMERIC_YEAR,
    FacetDefinition,
    FacetFilter,
    ImageDocument,
    parse_year,
)

MAGIC = b"IARTCAT1"
FORMAT_VERSION = 1

_HEADER_NAME = "header"
_LOG_NAME = "documents.log"


@dataclass
class _State:
    """All in-memory index state; copied wholesale for snapshots."""

    docs: dict[str, ImageDocument] = field(default_factory=dict)
    # token -> doc_id -> term count
    postings: dict[str, dict[str, int]] = field(default_factory=dict)
    # doc_id -> total token count (tf normalization denominator)
    doc_len: dict[str, int] = field(default_factory=dict)
    # facet field -> value -> doc_id set; numeric-year values are ints
    facet_values: dict[str, dict[object, set[str]]] = field(default_factory=dict)
    facets: dict[str, FacetDefinition] = field(default_factory=dict)

    def copy(self) -> "_State":
        return _State(
            docs=dict(self.docs),
            postings={t: dict(p) for t, p in self.postings.items()},
            doc_len=dict(self.doc_len),
            facet_values={f: {v: set(ids) for v, ids in vm.items()} for f, vm in self.facet_values.items()},
            facets=dict(self.facets),
        )


def _doc_facet_values(doc: ImageDocument, facet: FacetDefinition) -> list[object]:
    raw = doc.metadata.get(facet.field, [])
    if facet.kind == NUMERIC_YEAR:
        years = []
        for v in raw:
            year = parse_year(v)
            if year is not None and year not in years:
                years.append(year)
        return years
    return list(raw)


def _validate_filters(state: _State, filters: Sequence[FacetFilter]) -> None:
    for f in filters:
        facet = state.facets.get(f.field)
        if facet is None:
            raise ValidationError(
                f"unknown facet field {f.field!r}", detail={"field": f.field}
            )
        if f.values is not None and facet.kind != CATEGORICAL:
            raise ValidationError(
                f"facet {f.field!r} is {facet.kind}; value filters need a categorical facet",
                detail={"field": f.field},
            )
        if f.year_range is not None and facet.kind != NUMERIC_YEAR:
            raise ValidationError(
                f"facet {f.field!r} is {facet.kind}; range filters need a numeric-year facet",
                detail={"field": f.field},
            )


def _match_one(state: _State, f: FacetFilter) -> set[str]:
    vm = state.facet_values.get(f.field, {})
    matched: set[str] = set()
    if f.values is not None:
        for v in f.values:
            matched |= vm.get(v, set())
    else:
        lo, hi = f.year_range
        for year, ids in vm.items():
            if lo <= year <= hi:
                matched |= ids
    return matched


def _match_set(state: _State, filters: Sequence[FacetFilter]) -> list[str]:
    _validate_filters(state, filters)
    if not filters:
        return sorted(state.docs)
    current: set[str] | None = None
    for f in filters:
        matched = _match_one(state, f)
        current = matched if current is None else (current & matched)
        if not current:
            return []
    return sorted(current)


def _idf(state: _State, token: str) -> float:
    df = len(state.postings.get(token, ()))
    return math.log((1.0 + len(state.docs)) / (1.0 + df)) + 1.0


def _keyword_scores(state: _State, query: str) -> dict[str, float]:
    """Length-normalized token overlap with IDF weighting.

    score(d) = sum over distinct query tokens t present in d of
               idf(t) * count(t, d) / total_tokens(d)
    with idf(t) = ln((1 + N) / (1 + df(t))) + 1.
    """
    scores: dict[str, float] = {}
    for token in sorted(set(tokenize(query))):
        posting = state.postings.get(token)
        if not posting:
            continue
        idf = _idf(state, token)
        for doc_id, count in posting.items():
            length = state.doc_len.get(doc_id, 0)
            if length <= 0:
                continue
            scores[doc_id] = scores.get(doc_id, 0.0) + idf * (count / length)
    return scores


def _keyword_search(
    state: _State, query: str, filters: Sequence[FacetFilter], limit: int
) -> list[tuple[str, float]]:
    if limit < 1:
        raise ValidationError("limit must be >= 1")
    allowed = set(_match_set(state, filters)) if filters else None
    scores = _keyword_scores(state, query)
    hits = [
        (doc_id, s)
        for doc_id, s in scores.items()
        if allowed is None or doc_id in allowed
    ]
    hits.sort(key=lambda pair: (-pair[1], pair[0]))
    return hits[:limit]


def _facet_counts(
    state: _State, filters: Sequence[FacetFilter], facet_field: str
) -> dict[object, int]:
    facet = state.facets.get(facet_field)
    if facet is None:
        raise ValidationError(
            f"facet {facet_field!r} is not registered", detail={"field": facet_field}
        )
    matched = set(_match_set(state, filters))
    counts: dict[object, int] = {}
    for value, ids in state.facet_values.get(facet.field, {}).items():
        n = len(ids & matched)
        if n:
            counts[value] = n
    return counts


class CatalogView:
    """Immutable point-in-time view of a catalog (used per query)."""

    def __init__(self, state: _State):
        self._state = state

    def get(self, doc_id: str) -> ImageDocument:
        doc = self._state.docs.get(doc_id)
        if doc is None:
            raise NotFoundError(f"document {doc_id!r} not found")
        return doc

    def has(self, doc_id: str) -> bool:
        return doc_id in self._state.docs

    def __len__(self) -> int:
        return len(self._state.docs)

    def doc_ids(self) -> list[str]:
        return sorted(self._state.docs)

    def facets(self) -> list[FacetDefinition]:
        return [self._state.facets[f] for f in sorted(self._state.facets)]

    def match_set(self, filters: Sequence[FacetFilter] = ()) -> list[str]:
        return _match_set(self._state, filters)

    def keyword_search(
        self, query: str, filters: Sequence[FacetFilter] = (), limit: int = 50
    ) -> list[tuple[str, float]]:
        return _keyword_search(self._state, query, filters, limit)

    def facet_counts(
        self, filters: Sequence[FacetFilter], facet_field: str
    ) -> dict[object, int]:
        return _facet_counts(self._state, filters, facet_field)

    def facet_counts_over(self, doc_ids: Iterable[str], facet_field: str) -> dict[object, int]:
        """Value counts restricted to an explicit candidate id set."""
        facet = self._state.facets.get(facet_field)
        if facet is None:
            raise ValidationError(
                f"facet {facet_field!r} is not registered", detail={"field": facet_field}
            )
        candidate = set(doc_ids)
        counts: dict[object, int] = {}
        for value, ids in self._state.facet_values.get(facet.field, {}).items():
            n = len(ids & candidate)
            if n:
                counts[value] = n
        return counts


class Catalog:
    """Thread-safe catalog handle over one on-disk directory.

    Writes are serialized through an internal lock; reads lock briefly and
    operate on consistent state. ``snapshot()`` returns a detached view for
    multi-step readers (the query engine).
    """

    def __init__(self, path: str | Path, facets: Sequence[FacetDefinition] = ()):
        self.path = Path(path)
        self._lock = threading.RLock()
        self._state = _State()
        for f in facets:
            self._state.facets[f.field] = f
            self._state.facet_values.setdefault(f.field, {})
        self._open()

    # -- lifecycle -----------------------------------------------------

    def _open(self) -> None:
        self.path.mkdir(parents=True, exist_ok=True)
        header = self.path / _HEADER_NAME
        if header.exists():
            raw = header.read_bytes()
            if not raw.startswith(MAGIC):
                raise FormatError(f"not a catalog directory: bad magic in {_HEADER_NAME}")
            meta = json.loads(raw[len(MAGIC):].decode("utf-8"))
            if meta.get("format_version") != FORMAT_VERSION:
                raise FormatError(
                    f"unsupported catalog format version {meta.get('format_version')}"
                )
        else:
            header.write_bytes(MAGIC + json.dumps({"format_version": FORMAT_VERSION}).encode())
        self._replay()
        self._log = open(self.path / _LOG_NAME, "ab")

    def _replay(self) -> None:
        log_path = self.path / _LOG_NAME
        if not log_path.exists():
            return

        def parse(line: bytes) -> ImageDocument:
            record = json.loads(line.decode("utf-8"))
            return ImageDocument.from_record(record)

        # One-line lookahead: only the final line may be torn (crash
        # mid-append); a parse failure anywhere else is real corruption.
        good_end = 0
        pending: bytes | None = None
        with open(log_path, "rb") as fh:
            for line in fh:
                if pending is not None:
                    try:
                        doc = parse(pending)
                    except (ValueError, KeyError, ValidationError) as exc:
                        raise FormatError(f"corrupt catalog log record: {exc}") from exc
                    self._apply(doc)
                    good_end += len(pending)
                pending = line
        if pending is not None:
            if pending.endswith(b"\n"):
                try:
                    doc = parse(pending)
                    self._apply(doc)
                    good_end += len(pending)
                except (ValueError, KeyError, ValidationError):
                    pass  # corrupt final line: treat as torn, truncate below
        if good_end < log_path.stat().st_size:
            with open(log_path, "r+b") as fh:
                fh.truncate(good_end)

    def close(self) -> None:
        with self._lock:
            if self._log and not self._log.closed:
                self._log.close()

    def __enter__(self) -> "Catalog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- writes --------------------------------------------------------

    def _apply(self, doc: ImageDocument) -> None:
        old = self._state.docs.get(doc.doc_id)
        if old is not None:
            self._unindex(old)
        self._state.docs[doc.doc_id] = doc
        self._index(doc)

    def _index(self, doc: ImageDocument) -> None:
        counts = token_counts(doc.search_text())
        self._state.doc_len[doc.doc_id] = sum(counts.values())
        for token, count in counts.items():
            self._state.postings.setdefault(token, {})[doc.doc_id] = count
        for facet in self._state.facets.values():
            vm = self._state.facet_values.setdefault(facet.field, {})
            for value in _doc_facet_values(doc, facet):
                vm.setdefault(value, set()).add(doc.doc_id)

    def _unindex(self, doc: ImageDocument) -> None:
        self._state.doc_len.pop(doc.doc_id, None)
        for token in set(tokenize(doc.search_text())):
            posting = self._state.postings.get(token)
            if posting is not None:
                posting.pop(doc.doc_id, None)
                if not posting:
                    del self._state.postings[token]
        for facet in self._state.facets.values():
            vm = self._state.facet_values.get(facet.field, {})
            for value in _doc_facet_values(doc, facet):
                ids = vm.get(value)
                if ids is not None:
                    ids.discard(doc.doc_id)
                    if not ids:
                        del vm[value]

    def _append(self, docs: Sequence[ImageDocument]) -> None:
        try:
            for doc in docs:
                line = json.dumps(doc.to_record(), ensure_ascii=False, sort_keys=True)
                self._log.write(line.encode("utf-8") + b"\n")
            self._log.flush()
            os.fsync(self._log.fileno())
        except OSError as exc:
            raise StorageError(f"catalog append failed: {exc.strerror or exc}") from exc

    def upsert_document(self, doc: ImageDocument) -> None:
        """Durably store ``doc``; replaces any prior record with the same id."""
        if not isinstance(doc, ImageDocument):
            doc = ImageDocument(**doc)
        with self._lock:
            self._append([doc])
            self._apply(doc)

    def upsert_many(self, docs: Sequence[ImageDocument]) -> None:
        """Batch upsert with a single fsync; applied atomically to the indexes."""
        docs = list(docs)
        with self._lock:
            self._append(docs)
            for doc in docs:
                self._apply(doc)

    # -- reads ---------------------------------------------------------

    def snapshot(self) -> CatalogView:
        with self._lock:
            return CatalogView(self._state.copy())

    def get(self, doc_id: str) -> ImageDocument:
        with self._lock:
            doc = self._state.docs.get(doc_id)
        if doc is None:
            raise NotFoundError(f"document {doc_id!r} not found")
        return doc

    def has(self, doc_id: str) -> bool:
        with self._lock:
            return doc_id in self._state.docs

    def __len__(self) -> int:
        with self._lock:
            return len(self._state.docs)

    def doc_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._state.docs)

    def facets(self) -> list[FacetDefinition]:
        with self._lock:
            return [self._state.facets[f] for f in sorted(self._state.facets)]

    def keyword_search(
        self, query: str, filters: Sequence[FacetFilter] = (), limit: int = 50
    ) -> list[tuple[str, float]]:
        """Ranked keyword hits: (doc_id, score), score desc then doc_id asc."""
        with self._lock:
            return _keyword_search(self._state, query, filters, limit)

    def facet_counts(
        self, filters: Sequence[FacetFilter], facet_field: str
    ) -> dict[object, int]:
        """Value -> count of matching docs holding it (once per distinct value)."""
        with self._lock:
            return _facet_counts(self._state, filters, facet_field)

    def match_set(self, filters: Sequence[FacetFilter] = ()) -> list[str]:
        """Sorted ids of documents matching every filter (OR within, AND across)."""
        with self._lock:
            return _match_set(self._state, filters)


def load_facet_config(path: str | Path) -> list[FacetDefinition]:
    """Read facet definitions from a JSON config file.

    Expected shape: ``{"facets": [{"field": ..., "kind": ..., "display_name": ...}]}``.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise StorageError(f"cannot read facet config: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"facet config is not valid JSON (line {exc.lineno}): {exc.msg}")
    entries = data.get("facets")
    if not isinstance(entries, list):
        raise ValidationError("facet config must contain a 'facets' list")
    return [FacetDefinition.from_json(e) for e in entries]
