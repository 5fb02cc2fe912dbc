"""Index persistence: magic "IARTVEC1", JSON header, checksummed payload.

File layout::

    bytes 0-7    magic "IARTVEC1"
    bytes 8-11   uint32 LE header length H
    bytes 12-..  header JSON (H bytes)
    remainder    concatenated little-endian sections

The header carries plugin, dim, structure, params, count, a sha256 of the
payload, and per-section dtype/shape records. Wrong magic or version maps
to FormatError; checksum or length mismatch to IntegrityError.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import FormatError, IntegrityError
from .flat import FlatIndex
from .hnsw import HnswIndex

MAGIC = b"IARTVEC1"
FORMAT_VERSION = 1


def _array_section(name: str, arr: np.ndarray) -> tuple[dict, bytes]:
    arr = np.ascontiguousarray(arr)
    dtype = arr.dtype.newbyteorder("<")
    data = arr.astype(dtype, copy=False).tobytes()
    return {"name": name, "dtype": dtype.str, "shape": list(arr.shape),
            "nbytes": len(data)}, data


def _json_section(name: str, obj) -> tuple[dict, bytes]:
    data = json.dumps(obj, ensure_ascii=False).encode("utf-8")
    return {"name": name, "dtype": "json", "shape": [len(data)], "nbytes": len(data)}, data


def _write(path: Path, header: dict, sections: list[tuple[dict, bytes]]) -> None:
    payload = b"".join(data for _, data in sections)
    header = dict(header)
    header["format_version"] = FORMAT_VERSION
    header["checksum"] = hashlib.sha256(payload).hexdigest()
    header["sections"] = [meta for meta, _ in sections]
    head = json.dumps(header, ensure_ascii=False).encode("utf-8")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(head).to_bytes(4, "little"))
        fh.write(head)
        fh.write(payload)
        fh.flush()
    tmp.replace(path)


def _read(path: Path) -> tuple[dict, dict[str, object]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise FormatError(f"not an index file: bad magic {magic[:8]!r}")
        head_len = int.from_bytes(fh.read(4), "little")
        try:
            header = json.loads(fh.read(head_len).decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise FormatError(f"unreadable index header: {exc}") from exc
        if header.get("format_version") != FORMAT_VERSION:
            raise FormatError(
                f"unsupported index format version {header.get('format_version')}")
        payload = fh.read()
    expected = sum(int(s["nbytes"]) for s in header.get("sections", []))
    if len(payload) != expected:
        raise IntegrityError(
            f"index payload truncated: {len(payload)} bytes, expected {expected}")
    if hashlib.sha256(payload).hexdigest() != header.get("checksum"):
        raise IntegrityError("index payload checksum mismatch")
    sections: dict[str, object] = {}
    offset = 0
    for meta in header["sections"]:
        chunk = payload[offset : offset + meta["nbytes"]]
        offset += meta["nbytes"]
        if meta["dtype"] == "json":
            sections[meta["name"]] = json.loads(chunk.decode("utf-8"))
        else:
            arr = np.frombuffer(chunk, dtype=np.dtype(meta["dtype"]))
            sections[meta["name"]] = arr.reshape(meta["shape"]).copy()
    return header, sections


def save_index(index: FlatIndex | HnswIndex, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(index, FlatIndex):
        n = len(index._ids)
        header = {
            "plugin": index.plugin_name,
            "dim": index.dim,
            "structure": "flat",
            "params": {},
            "count": n,
        }
        sections = [
            _json_section("ids", index._ids),
            _array_section("vectors", index._matrix[:n]),
        ]
        _write(path, header, sections)
        return
    if isinstance(index, HnswIndex):
        index._lock.acquire_read()
        try:
            n = index._count
            header = {
                "plugin": index.plugin_name,
                "dim": index.dim,
                "structure": "graph",
                "params": {
                    "M": index.M,
                    "ef_construction": index.ef_construction,
                    "ef_search": index.ef_search,
                    "seed": index.seed,
                    "filter_scan_fraction": index.filter_scan_fraction,
                    "filter_ef_inflation": index.filter_ef_inflation,
                    "entry": index._entry,
                    "max_level": index._max_level,
                    "upper_rows": index._upper_rows,
                    "live": index._live,
                    "rng_state": index._rng.bit_generator.state,
                },
                "count": n,
            }
            sections = [
                _json_section("ids", index._ids),
                _array_section("vectors", index._vectors[:n]),
                _array_section("levels", index._levels[:n]),
                _array_section("links0", index._links0[:n]),
                _array_section("links0_cnt", index._links0_cnt[:n]),
                _array_section("upper_start", index._upper_start[:n]),
                _array_section("alive", index._alive[:n]),
                _array_section("upper_links", index._upper_links[: index._upper_rows]),
                _array_section("upper_cnt", index._upper_cnt[: index._upper_rows]),
            ]
            _write(path, header, sections)
            return
        finally:
            index._lock.release_read()
    raise FormatError(f"cannot persist index type {type(index).__name__}")


def load_index(path: str | Path) -> FlatIndex | HnswIndex:
    header, sections = _read(Path(path))
    structure = header.get("structure")
    n = int(header.get("count", 0))
    ids = sections.get("ids", [])
    if structure == "flat":
        index = FlatIndex(int(header["dim"]), header.get("plugin", ""))
        index._matrix = np.ascontiguousarray(sections["vectors"], dtype=np.float32)
        index._ids = list(ids)
        index._pos = {doc_id: i for i, doc_id in enumerate(index._ids)}
        return index
    if structure == "graph":
        params = header.get("params", {})
        index = HnswIndex(
            int(header["dim"]), header.get("plugin", ""),
            M=int(params["M"]), ef_construction=int(params["ef_construction"]),
            ef_search=int(params["ef_search"]), seed=int(params["seed"]),
            filter_scan_fraction=float(params.get("filter_scan_fraction", 0.01)),
            filter_ef_inflation=int(params.get("filter_ef_inflation", 4)),
        )
        index._ensure_node_capacity(max(n, 1))
        index._ensure_upper_capacity(max(int(params["upper_rows"]), 1))
        index._vectors[:n] = sections["vectors"]
        index._levels[:n] = sections["levels"]
        index._links0[:n] = sections["links0"]
        index._links0_cnt[:n] = sections["links0_cnt"]
        index._upper_start[:n] = sections["upper_start"]
        index._alive[:n] = sections["alive"]
        rows = int(params["upper_rows"])
        index._upper_links[:rows] = sections["upper_links"]
        index._upper_cnt[:rows] = sections["upper_cnt"]
        index._upper_rows = rows
        index._count = n
        index._live = int(params["live"])
        index._entry = int(params["entry"])
        index._max_level = int(params["max_level"])
        index._ids = list(ids)
        index._pos = {doc_id: i for i, doc_id in enumerate(index._ids)
                      if index._alive[i]}
        state = params.get("rng_state")
        if state is not None:
            index._rng.bit_generator.state = state
        return index
    raise FormatError(f"unknown index structure {structure!r}")
