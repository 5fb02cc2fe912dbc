from .jobs import COMPLETED, FAILED, PARTIAL, PENDING, RUNNING, IngestJob, JobTracker
from .manifest import ManifestEntry, ManifestError, parse_manifest_lines, read_manifest
from .pipeline import AUTO_FIELD_PREFIX, Ingestor

__all__ = [
    "IngestJob",
    "JobTracker",
    "ManifestEntry",
    "ManifestError",
    "parse_manifest_lines",
    "read_manifest",
    "Ingestor",
    "AUTO_FIELD_PREFIX",
    "PENDING",
    "RUNNING",
    "COMPLETED",
    "FAILED",
    "PARTIAL",
]
