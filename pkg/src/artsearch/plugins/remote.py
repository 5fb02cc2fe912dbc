"""HTTP client for the inference wire protocol.

Protocol (shared with the stub server and any external inference tier):

* ``POST {endpoint}/v1/extract`` with body
  ``{"plugin": str, "inputs": [{"kind": "image", "data_b64": str} |
  {"kind": "text", "text": str}, ...]}``; response
  ``{"dim": int, "vectors": [[float, ...], ...],
  "labels": [[["kw", conf], ...], ...]?, "model_version": str}``.
* ``GET {endpoint}/v1/health`` returning
  ``{"status": "ok", "plugins": [manifest, ...]}``.

HTTP 400 maps to ValidationError, 503 and transport failures to
TransientError. Vectors travel as JSON decimal floats, which round-trips
float32 exactly (float32 -> float64 -> shortest repr -> float64 -> float32).
"""

from __future__ import annotations

import base64
import threading

import httpx
import numpy as np

from ..errors import RegistrationError, TransientError, ValidationError
from .base import IMAGE, ExtractionInput, ExtractionItem, PluginManifest

DEFAULT_TIMEOUT = 30.0
DEFAULT_MAX_IN_FLIGHT = 4


def encode_inputs(inputs: list[ExtractionInput]) -> list[dict]:
    out = []
    for inp in inputs:
        if inp.kind == IMAGE:
            out.append({"kind": "image", "data_b64": base64.b64encode(inp.payload).decode("ascii")})
        else:
            out.append({"kind": "text", "text": inp.payload})
    return out


class RemoteBackend:
    """Backend for one plugin served by a remote inference endpoint."""

    def __init__(
        self,
        plugin_name: str,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        self.plugin_name = plugin_name
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout)
        self.manifest = self._health_check()

    def _health_check(self) -> PluginManifest:
        try:
            resp = self._client.get(f"{self.endpoint}/v1/health")
        except httpx.HTTPError as exc:
            raise RegistrationError(
                f"inference endpoint unreachable: {exc.__class__.__name__}",
                detail={"endpoint": self.endpoint},
            ) from exc
        if resp.status_code != 200:
            raise RegistrationError(
                f"inference endpoint health check returned HTTP {resp.status_code}",
                detail={"endpoint": self.endpoint},
            )
        body = resp.json()
        if body.get("status") != "ok":
            raise RegistrationError(
                f"inference endpoint unhealthy: {body.get('status')!r}",
                detail={"endpoint": self.endpoint},
            )
        for entry in body.get("plugins", []):
            if entry.get("name") == self.plugin_name:
                return PluginManifest.from_json(entry)
        raise RegistrationError(
            f"endpoint does not serve plugin {self.plugin_name!r}",
            detail={"endpoint": self.endpoint},
        )

    def extract_batch(self, inputs: list[ExtractionInput]) -> list[ExtractionItem]:
        body = {"plugin": self.plugin_name, "inputs": encode_inputs(inputs)}
        with self._gate:
            try:
                resp = self._client.post(f"{self.endpoint}/v1/extract", json=body)
            except httpx.TimeoutException as exc:
                raise TransientError(
                    f"inference request timed out after {self.timeout}s"
                ) from exc
            except httpx.HTTPError as exc:
                raise TransientError(
                    f"inference request failed: {exc.__class__.__name__}"
                ) from exc
        if resp.status_code == 400:
            raise ValidationError(f"inference server rejected request: {resp.text[:500]}")
        if resp.status_code == 503:
            raise TransientError("inference server temporarily unavailable")
        if resp.status_code != 200:
            raise TransientError(f"inference server returned HTTP {resp.status_code}")
        payload = resp.json()
        vectors = payload.get("vectors")
        labels = payload.get("labels")
        if not isinstance(vectors, list) or len(vectors) != len(inputs):
            raise TransientError("malformed inference response: vector count mismatch")
        items = []
        for i in range(len(inputs)):
            vec = None
            if vectors[i] is not None:
                vec = np.asarray(vectors[i], dtype=np.float64).astype(np.float32)
            lab = None
            if labels is not None and i < len(labels) and labels[i] is not None:
                lab = [(str(kw), float(conf)) for kw, conf in labels[i]]
            items.append(ExtractionItem(vector=vec, labels=lab))
        return items

    def close(self) -> None:
        self._client.close()
