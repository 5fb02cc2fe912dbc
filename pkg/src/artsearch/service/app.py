"""HTTP/JSON API over the workspace (search, uploads, ingest, documents).

Stateless request handlers over thread-safe module handles; the only
server-side state beyond the data directory is the upload token store.
Responses are deterministic for identical requests against an unchanged
index (no timestamps or randomness in the search path).
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ArtSearchError, ValidationError
from ..query.spec import QuerySpec
from ..workspace import Workspace
from .config import ServerConfig, json_pointer, schema_validator
from .uploads import UploadStore

_STATUS_BY_CODE = {"validation": 400, "not_found": 404, "transient": 503, "internal": 500}


def _error_response(code: str, message: str, detail: dict | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS_BY_CODE.get(code, 500),
        content={"code": code, "message": message, "detail": detail or {}},
    )


def _doc_summary(doc) -> dict:
    return {
        "doc_id": doc.doc_id,
        "collection_id": doc.collection_id,
        "image_ref": doc.image_ref,
        "title": doc.title,
        "metadata": doc.metadata,
    }


def build_app(workspace: Workspace, config: ServerConfig | None = None,
              uploads: UploadStore | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    config = config or ServerConfig()
    uploads = uploads or UploadStore(
        ttl_seconds=config.upload_ttl_seconds, max_bytes=config.max_upload_bytes)
    app = FastAPI(title="artsearch", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.workspace = workspace
    app.state.uploads = uploads
    app.state.config = config
    spec_validator = schema_validator("query_spec.schema.json")

    @app.exception_handler(ArtSearchError)
    async def handle_artsearch_error(request: Request, exc: ArtSearchError):
        return _error_response(exc.code, exc.message, exc.detail)

    @app.exception_handler(Exception)
    async def handle_unexpected(request: Request, exc: Exception):
        return _error_response("internal", f"unexpected {exc.__class__.__name__}")

    async def _json_body(request: Request) -> dict:
        try:
            return json.loads(await request.body())
        except (ValueError, UnicodeDecodeError) as exc:
            raise ValidationError(f"request body is not valid JSON: {exc}") from exc

    def _parse_spec(data: dict) -> QuerySpec:
        errors = sorted(spec_validator.iter_errors(data),
                        key=lambda e: (list(e.absolute_path), e.message))
        if errors:
            first = errors[0]
            raise ValidationError(
                f"{json_pointer(first)}: {first.message}",
                detail={"pointer": json_pointer(first)},
            )
        spec = QuerySpec.from_json(data, resolve_upload=uploads.resolve)
        if spec.limit > config.max_page_size:
            raise ValidationError(
                f"/page/limit: exceeds the configured maximum {config.max_page_size}",
                detail={"pointer": "/page/limit"},
            )
        return spec

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "documents": len(workspace.catalog)}

    @app.post("/v1/search")
    async def search(request: Request):
        spec = _parse_spec(await _json_body(request))
        page = workspace.search(spec)
        payload = page.to_json()
        snapshot = workspace.snapshot()
        referenced = [r.doc_id for r in page.results]
        if page.layout:
            referenced.extend(page.layout.get("coords", {}))
            referenced.extend(page.layout.get("clusters", {}))
        documents = {}
        for doc_id in sorted(set(referenced)):
            if snapshot.has(doc_id):
                documents[doc_id] = _doc_summary(snapshot.get(doc_id))
        payload["documents"] = documents
        return JSONResponse(content=payload)

    @app.post("/v1/explain")
    async def explain(request: Request):
        body = await _json_body(request)
        if not isinstance(body, dict) or "spec" not in body or "doc_id" not in body:
            raise ValidationError("body must carry 'spec' and 'doc_id'")
        spec = _parse_spec(body["spec"])
        return JSONResponse(content=workspace.explain(spec, str(body["doc_id"])))

    @app.post("/v1/uploads")
    async def upload(request: Request):
        data = await request.body()
        token = uploads.add(data)
        return JSONResponse(status_code=201, content={"upload_token": token})

    @app.post("/v1/collections/{collection_id}/ingest")
    async def ingest(collection_id: str, request: Request,
                     plugins: str | None = None, parallelism: int = 1):
        body = (await request.body()).decode("utf-8", errors="replace")
        if not body.strip():
            raise ValidationError("manifest body is empty")
        names = ([p.strip() for p in plugins.split(",") if p.strip()]
                 if plugins else [m.name for m in workspace.registry.list_plugins()])
        for name in names:
            workspace.registry.manifest(name)  # validate before accepting the job
        job = workspace.start_ingest(
            body.splitlines(), collection_id, names, parallelism=parallelism,
            image_root=config.data_dir)
        return JSONResponse(status_code=202, content={"job_id": job.job_id})

    @app.get("/v1/jobs/{job_id}")
    async def job_status(job_id: str):
        return JSONResponse(content=workspace.jobs.get(job_id).to_json())

    @app.get("/v1/documents/{doc_id}")
    async def get_document(doc_id: str):
        doc = workspace.snapshot().get(doc_id)
        payload = _doc_summary(doc)
        payload["ingested_at"] = doc.ingested_at.isoformat()
        return JSONResponse(content=payload)

    @app.get("/v1/plugins")
    async def plugins_():
        return JSONResponse(content={
            "plugins": [m.to_json() for m in workspace.registry.list_plugins()]})

    @app.get("/v1/facets")
    async def facets_():
        return JSONResponse(content={
            "facets": [f.to_json() for f in workspace.catalog.facets()]})

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(config: ServerConfig, ui_dir: str | Path | None = None) -> None:
    """Build the workspace from config and run the HTTP server (blocking)."""
    import uvicorn

    workspace = Workspace(
        config.data_dir, facets=config.facets,
        index_structure=config.index_structure, index_params=config.index_params,
        per_plugin_index=config.per_plugin_index)
    for plugin in config.plugins:
        if plugin.backend.startswith(("http://", "https://")):
            from ..plugins.base import PluginManifest

            manifest = PluginManifest(
                name=plugin.name, version="0", modalities=frozenset({"image"}),
                vector_dim=plugin.vector_dim or 1)
            workspace.register_plugin(plugin.backend, manifest,
                                      timeout=plugin.timeout,
                                      max_in_flight=plugin.max_in_flight)
        else:
            workspace.register_plugin(plugin.backend)
    app = build_app(workspace, config, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="info")
    finally:
        workspace.close()
