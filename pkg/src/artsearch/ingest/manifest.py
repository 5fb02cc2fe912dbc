"""JSON-Lines collection manifest reader.

Entry shape: ``{"id": str, "image": str, "metadata": {field: [values]}}``
plus an optional ``"url"`` stored as the document's display reference.
Each line parses independently: a malformed line or duplicate id skips
that one entry and is reported, never the whole manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..errors import StorageError


@dataclass
class ManifestEntry:
    entry_id: str
    image: str
    metadata: dict = field(default_factory=dict)
    display_url: str | None = None
    line_no: int = 0


@dataclass
class ManifestError:
    line_no: int
    message: str
    entry_id: str | None = None


def parse_manifest_lines(lines: Iterable[str]) -> tuple[list[ManifestEntry], list[ManifestError]]:
    entries: list[ManifestEntry] = []
    errors: list[ManifestError] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            errors.append(ManifestError(line_no, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(record, dict):
            errors.append(ManifestError(line_no, "entry must be a JSON object"))
            continue
        entry_id = record.get("id")
        image = record.get("image")
        if not isinstance(entry_id, str) or not entry_id:
            errors.append(ManifestError(line_no, "entry is missing a string 'id'"))
            continue
        if not isinstance(image, str) or not image:
            errors.append(ManifestError(line_no, "entry is missing a string 'image'",
                                        entry_id=entry_id))
            continue
        if entry_id in seen:
            errors.append(ManifestError(line_no, f"duplicate id {entry_id!r}",
                                        entry_id=entry_id))
            continue
        metadata = record.get("metadata", {})
        if not isinstance(metadata, dict):
            errors.append(ManifestError(line_no, "'metadata' must be an object",
                                        entry_id=entry_id))
            continue
        seen.add(entry_id)
        entries.append(ManifestEntry(
            entry_id=entry_id,
            image=image,
            metadata=metadata,
            display_url=record.get("url"),
            line_no=line_no,
        ))
    return entries, errors


def read_manifest(path: str | Path) -> tuple[list[ManifestEntry], list[ManifestError]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_manifest_lines(fh)
    except OSError as exc:
        raise StorageError(f"cannot read manifest: {exc.strerror or exc}") from exc
