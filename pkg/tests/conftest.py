from __future__ import annotations

import io
import json
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))

from artsearch.catalog import FacetDefinition
from artsearch.plugins import encode_text_image
from artsearch.query.spec import QuerySpec, QueryTerm
from artsearch.workspace import Workspace

ACCEPTANCE_RESULTS: list[str] = []


def record_criterion(number: int, description: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number:2d} [{status}] {description}"
    if detail:
        line += f" :: {detail}"
    ACCEPTANCE_RESULTS.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


ARTISTS = ["rembrandt", "vermeer", "hals", "steen", "ruysdael"]
THEMES = [
    "saint sebastian arrows martyr",
    "crucifixion cross golgotha",
    "windmill landscape dutch sky",
    "still life tulips vase",
    "portrait burgher black hat",
    "harbor ships amsterdam trade",
]


def solid_png(rgb: tuple[int, int, int], size: int = 32) -> bytes:
    img = Image.new("RGB", (size, size), rgb)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def default_facets() -> list[FacetDefinition]:
    return [
        FacetDefinition("artist"),
        FacetDefinition("theme"),
        FacetDefinition("year", "numeric-year", "Year"),
        FacetDefinition("auto:red-threshold", "categorical", "Auto labels"),
    ]


def synth_corpus(tmp_path: Path, n: int, seed: int = 0,
                 name: str = "corpus") -> tuple[Path, dict[str, dict]]:
    """Fixture corpus: stego images with known metadata; returns
    (manifest_path, raw doc dicts keyed by id for oracle use)."""
    rng = np.random.default_rng(seed)
    img_dir = tmp_path / f"{name}-images"
    img_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    docs: dict[str, dict] = {}
    for i in range(n):
        doc_id = f"{name}-{i:05d}"
        artist = ARTISTS[int(rng.integers(len(ARTISTS)))]
        theme = THEMES[int(rng.integers(len(THEMES)))]
        year = int(1580 + rng.integers(120))
        text = f"{theme} {artist} variant {i}"
        image_path = img_dir / f"{doc_id}.png"
        image_path.write_bytes(encode_text_image(text))
        metadata = {
            "artist": [artist],
            "theme": [theme.split()[0]],
            "year": [str(year)],
        }
        lines.append(json.dumps({
            "id": doc_id,
            "image": str(image_path),
            "metadata": {**metadata, "title": [text.title()]},
        }))
        docs[doc_id] = {"title": text.title(), "metadata": metadata, "text": text}
    manifest = tmp_path / f"{name}.jsonl"
    manifest.write_text("\n".join(lines), encoding="utf-8")
    return manifest, docs


@pytest.fixture
def workspace(tmp_path):
    ws = Workspace(tmp_path / "data", facets=default_facets(), retry_base_delay=0.0)
    ws.register_builtins()
    yield ws
    ws.close()


def query_battery(ws: Workspace) -> str:
    """Deterministic battery of searches; serialized for state comparison.

    Excludes timestamps so independently built workspaces with identical
    content serialize identically.
    """
    from artsearch.catalog.types import FacetFilter

    out = []
    specs = [
        QuerySpec(terms=[QueryTerm(text="crucifixion cross")], limit=50),
        QuerySpec(terms=[QueryTerm(text="windmill sky")],
                  filters=[FacetFilter("artist", values=("rembrandt", "vermeer"))],
                  limit=50),
        QuerySpec(terms=[QueryTerm(text="portrait hat")],
                  keyword_query="portrait", limit=50),
        QuerySpec(terms=[QueryTerm(text="harbor ships"),
                         QueryTerm(text="still life", weight=-0.5)], limit=50),
    ]
    for spec in specs:
        page = ws.search(spec)
        out.append(page.to_json())
    out.append(ws.catalog.keyword_search("saint martyr", limit=50))
    out.append(ws.catalog.match_set([FacetFilter("year", year_range=(1600, 1660))]))
    counts = ws.catalog.facet_counts([], "artist")
    out.append(sorted(counts.items()))
    docs = []
    for doc_id in ws.catalog.doc_ids():
        doc = ws.catalog.get(doc_id).to_record()
        doc.pop("ingested_at", None)
        docs.append(doc)
    out.append(docs)
    return json.dumps(out, sort_keys=True)
