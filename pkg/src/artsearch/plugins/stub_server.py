"""Deterministic local inference server implementing the wire protocol.

Serves the builtin extractors plus a constant-vector "fixture" plugin over
HTTP, standing in for an external inference tier. Intended for tests and
local development; runs single-process on a background thread.
"""

from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from ..errors import ValidationError
from ..vecmath import l2_normalize
from .base import FEATURE, ExtractionInput, PluginManifest
from .builtin import BUILTIN_BACKENDS, BuiltinBackend

# Documented fixture: every extraction returns this exact vector.
FIXTURE_VECTOR = l2_normalize(np.arange(1.0, 9.0))
FIXTURE_LABELS = [["fixture-label", 0.75], ["fixture-alt", 0.25]]


class FixtureBackend(BuiltinBackend):
    """Constant-output plugin used to verify protocol round-trips."""

    manifest = PluginManifest(
        name="fixture",
        version="1.0.0",
        modalities=frozenset({"image", "text"}),
        vector_dim=8,
        kind=FEATURE,
    )

    def extract_one(self, inp: ExtractionInput) -> np.ndarray:
        return FIXTURE_VECTOR.copy()


def _decode_wire_inputs(raw_inputs: list) -> list[ExtractionInput]:
    inputs = []
    for entry in raw_inputs:
        kind = entry.get("kind")
        if kind == "image":
            try:
                data = base64.b64decode(entry.get("data_b64", ""), validate=True)
            except (ValueError, TypeError) as exc:
                raise ValidationError(f"bad base64 image payload: {exc}") from exc
            inputs.append(ExtractionInput.image(data))
        elif kind == "text":
            inputs.append(ExtractionInput.text(entry.get("text", "")))
        else:
            raise ValidationError(f"unknown input kind {kind!r}")
    return inputs


class _Handler(BaseHTTPRequestHandler):
    server_version = "StubInference/1.0"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/v1/health":
            manifests = [b.manifest.to_json() for b in self.server.backends.values()]
            self._send_json(200, {"status": "ok", "plugins": manifests})
        else:
            self._send_json(404, {"error": "unknown path"})

    def do_POST(self):
        if self.path != "/v1/extract":
            self._send_json(404, {"error": "unknown path"})
            return
        if self.server.consume_transient_failure():
            self._send_json(503, {"error": "temporarily unavailable"})
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            self._send_json(400, {"error": "request body is not valid JSON"})
            return
        backend = self.server.backends.get(body.get("plugin"))
        if backend is None:
            self._send_json(400, {"error": f"unknown plugin {body.get('plugin')!r}"})
            return
        try:
            inputs = _decode_wire_inputs(body.get("inputs", []))
            items = backend.extract_batch(inputs)
        except ValidationError as exc:
            self._send_json(400, {"error": exc.message})
            return
        vectors, labels, have_labels = [], [], False
        for item in items:
            if item.error is not None:
                self._send_json(400, {"error": item.error})
                return
            if item.vector is not None:
                # float32 -> float64 -> shortest JSON repr round-trips exactly
                vectors.append([float(x) for x in item.vector])
            else:
                vectors.append([0.0] * backend.manifest.vector_dim)
            if item.labels is not None:
                have_labels = True
                labels.append([[kw, float(conf)] for kw, conf in item.labels])
            else:
                labels.append(None)
        response = {
            "dim": backend.manifest.vector_dim,
            "vectors": vectors,
            "model_version": backend.manifest.version,
        }
        if have_labels:
            response["labels"] = labels
        self._send_json(200, response)


class _StubHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, addr, backends, transient_failures: int):
        super().__init__(addr, _Handler)
        self.backends = backends
        self._transient_left = transient_failures
        self._lock = threading.Lock()

    def consume_transient_failure(self) -> bool:
        with self._lock:
            if self._transient_left > 0:
                self._transient_left -= 1
                return True
            return False


class StubInferenceServer:
    """Background-thread inference server for tests and local runs.

    ``transient_failures`` makes the first N extract calls return HTTP 503,
    for exercising retry paths.
    """

    def __init__(self, plugins: list[str] | None = None, host: str = "127.0.0.1",
                 port: int = 0, transient_failures: int = 0):
        backends: dict[str, BuiltinBackend] = {"fixture": FixtureBackend()}
        for name in plugins if plugins is not None else sorted(BUILTIN_BACKENDS):
            backends[name] = BUILTIN_BACKENDS[name]()
        self._server = _StubHTTPServer((host, port), backends, transient_failures)
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> str:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.endpoint

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "StubInferenceServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def main() -> None:  # pragma: no cover - manual entry point
    import argparse

    parser = argparse.ArgumentParser(description="Run the stub inference server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8691)
    args = parser.parse_args()
    server = StubInferenceServer(host=args.host, port=args.port)
    print(f"stub inference server listening on {server.start()}")
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        server.stop()


if __name__ == "__main__":  # pragma: no cover
    main()
