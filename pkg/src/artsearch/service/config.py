"""Server configuration: JSON file, schema-validated, env-overridable.

Environment overrides: ``ARTSEARCH_LISTEN`` (host:port) and
``ARTSEARCH_DATA_DIR``. An invalid file aborts startup with a
line-numbered (JSON syntax) or JSON-pointer (semantic) error.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from ..catalog.types import FacetDefinition
from ..errors import StorageError, ValidationError

DEFAULT_LISTEN = "127.0.0.1:8080"
DEFAULT_MAX_UPLOAD_BYTES = 8 * 1024 * 1024
DEFAULT_MAX_PAGE_SIZE = 500
DEFAULT_UPLOAD_TTL_SECONDS = 3600.0


def load_schema(name: str) -> dict:
    with resources.files("artsearch.schemas").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def schema_validator(name: str):
    schema = load_schema(name)
    cls = jsonschema.validators.validator_for(schema)
    return cls(schema)


def json_pointer(error: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in error.absolute_path)


@dataclass
class PluginConfig:
    name: str
    backend: str
    vector_dim: int | None = None
    timeout: float = 30.0
    max_in_flight: int = 4


@dataclass
class ServerConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    data_dir: Path = Path("./artsearch-data")
    plugins: list[PluginConfig] = field(default_factory=list)
    facets: list[FacetDefinition] = field(default_factory=list)
    index_structure: str = "flat"
    index_params: dict = field(default_factory=dict)
    per_plugin_index: dict = field(default_factory=dict)
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    max_page_size: int = DEFAULT_MAX_PAGE_SIZE
    upload_ttl_seconds: float = DEFAULT_UPLOAD_TTL_SECONDS

    @classmethod
    def from_file(cls, path: str | Path, env: dict | None = None) -> "ServerConfig":
        env = env if env is not None else dict(os.environ)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot read config file: {exc.strerror or exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"config line {exc.lineno}, column {exc.colno}: {exc.msg}",
                detail={"line": exc.lineno, "column": exc.colno},
            ) from exc
        validator = schema_validator("server_config.schema.json")
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            first = errors[0]
            raise ValidationError(
                f"config field {json_pointer(first)}: {first.message}",
                detail={"pointer": json_pointer(first)},
            )
        return cls.from_dict(data, env)

    @classmethod
    def from_dict(cls, data: dict, env: dict | None = None) -> "ServerConfig":
        env = env or {}
        listen = env.get("ARTSEARCH_LISTEN") or data.get("listen", DEFAULT_LISTEN)
        host, _, port_text = listen.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            raise ValidationError(f"invalid listen address {listen!r}") from None
        data_dir = Path(env.get("ARTSEARCH_DATA_DIR") or data.get("data_dir", "./artsearch-data"))
        plugins = [
            PluginConfig(
                name=p["name"],
                backend=p["backend"],
                vector_dim=p.get("vector_dim"),
                timeout=float(p.get("timeout", 30.0)),
                max_in_flight=int(p.get("max_in_flight", 4)),
            )
            for p in data.get("plugins", [])
        ]
        facets = [FacetDefinition.from_json(f) for f in data.get("facets", [])]
        index = data.get("index", {})
        limits = data.get("limits", {})
        return cls(
            listen_host=host or "127.0.0.1",
            listen_port=port,
            data_dir=data_dir,
            plugins=plugins,
            facets=facets,
            index_structure=index.get("structure", "flat"),
            index_params=index.get("params", {}),
            per_plugin_index=index.get("per_plugin", {}),
            max_upload_bytes=int(limits.get("max_upload_bytes", DEFAULT_MAX_UPLOAD_BYTES)),
            max_page_size=int(limits.get("max_page_size", DEFAULT_MAX_PAGE_SIZE)),
            upload_ttl_seconds=float(limits.get("upload_ttl_seconds", DEFAULT_UPLOAD_TTL_SECONDS)),
        )
