"""In-memory upload token store with TTL expiry."""

from __future__ import annotations

import secrets
import threading
import time

from ..errors import ValidationError


class UploadStore:
    def __init__(self, ttl_seconds: float = 3600.0, max_bytes: int = 8 * 1024 * 1024,
                 clock=time.monotonic):
        self.ttl = float(ttl_seconds)
        self.max_bytes = int(max_bytes)
        self._clock = clock
        self._lock = threading.Lock()
        self._items: dict[str, tuple[bytes, float]] = {}

    def add(self, data: bytes) -> str:
        if len(data) > self.max_bytes:
            raise ValidationError(
                f"upload of {len(data)} bytes exceeds the {self.max_bytes} byte limit")
        if not data:
            raise ValidationError("upload body is empty")
        token = "upl_" + secrets.token_urlsafe(16)
        with self._lock:
            self._sweep()
            self._items[token] = (data, self._clock() + self.ttl)
        return token

    def resolve(self, token: str) -> bytes:
        with self._lock:
            item = self._items.get(token)
            if item is None:
                raise ValidationError(f"unknown upload token {token!r}")
            data, expires = item
            if self._clock() > expires:
                del self._items[token]
                raise ValidationError(f"upload token {token!r} has expired")
            return data

    def _sweep(self) -> None:
        now = self._clock()
        for token in [t for t, (_, exp) in self._items.items() if now > exp]:
            del self._items[token]

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)
