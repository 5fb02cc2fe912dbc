"""Exception hierarchy shared across the engine.

The error classes map one-to-one onto the API error codes exposed by the
HTTP service (validation / not_found / transient / internal) plus two
storage-level conditions (format / integrity) that surface as internal
errors over the wire.
"""

from __future__ import annotations

from typing import Any


class ArtSearchError(Exception):
    """Base class for all errors raised by this package."""

    code = "internal"

    def __init__(self, message: str, detail: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


class ValidationError(ArtSearchError):
    """Caller supplied malformed or contract-violating input."""

    code = "validation"


class NotFoundError(ArtSearchError):
    """A referenced document, plugin, or job does not exist."""

    code = "not_found"


class TransientError(ArtSearchError):
    """Retryable failure (remote timeout, temporarily unavailable backend)."""

    code = "transient"


class RegistrationError(ArtSearchError):
    """A plugin could not be registered (unreachable or inconsistent backend)."""

    code = "validation"


class FormatError(ArtSearchError):
    """A persisted file carries the wrong magic or an unsupported version."""

    code = "internal"


class IntegrityError(ArtSearchError):
    """A persisted file is corrupt (checksum mismatch, truncation)."""

    code = "internal"


class StorageError(ArtSearchError):
    """An I/O failure while reading or writing catalog/index state."""

    code = "internal"
