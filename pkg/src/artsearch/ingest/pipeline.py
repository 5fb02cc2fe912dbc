"""Batch ingestion: decode, extract, classify, commit, track.

Entries are processed by a worker pool but committed strictly in manifest
order, so the final catalog/index state is identical for any parallelism
level (graph indexes are insertion-order sensitive). Each entry commits
atomically: the document and all its vectors become visible together or
not at all. Extraction goes through the registry's content-hash cache,
which makes re-runs of an unchanged manifest free of backend calls.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..catalog.types import ImageDocument
from ..errors import StorageError, TransientError, ValidationError
from ..plugins.base import CLASSIFIER, FEATURE, IMAGE, ExtractionInput
from .jobs import IngestJob, JobTracker
from .manifest import ManifestEntry, parse_manifest_lines, read_manifest

AUTO_FIELD_PREFIX = "auto:"


class _EntryFailure(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class Ingestor:
    def __init__(self, workspace, tracker: JobTracker,
                 retry_attempts: int = 3, retry_base_delay: float = 0.2):
        self.workspace = workspace
        self.tracker = tracker
        self.retry_attempts = retry_attempts
        self.retry_base_delay = retry_base_delay

    # -- public ------------------------------------------------------------

    def start(self, manifest, collection_id: str, plugins: list[str],
              parallelism: int = 1, image_root: str | Path | None = None) -> IngestJob:
        """Run ingestion on a background thread; returns the job handle."""
        job = self.tracker.create()
        thread = threading.Thread(
            target=self._run_job,
            args=(job.job_id, manifest, collection_id, plugins, parallelism, image_root),
            daemon=True,
        )
        thread.start()
        return self.tracker.get(job.job_id)

    def run(self, manifest, collection_id: str, plugins: list[str],
            parallelism: int = 1, image_root: str | Path | None = None) -> IngestJob:
        """Synchronous ingestion; returns the finished job."""
        job = self.tracker.create()
        self._run_job(job.job_id, manifest, collection_id, plugins, parallelism, image_root)
        return self.tracker.get(job.job_id)

    # -- internals -----------------------------------------------------------

    def _resolve_plugins(self, plugins: list[str]) -> tuple[list[str], list[str]]:
        features, classifiers = [], []
        for name in plugins:
            man = self.workspace.registry.manifest(name)  # raises if unregistered
            if man.kind == FEATURE:
                features.append(name)
            elif man.kind == CLASSIFIER:
                classifiers.append(name)
        return features, classifiers

    def _load_entries(self, manifest, image_root):
        if isinstance(manifest, (str, Path)):
            entries, errors = read_manifest(manifest)
            root = Path(image_root) if image_root else Path(manifest).parent
        elif isinstance(manifest, list) and all(isinstance(e, ManifestEntry) for e in manifest):
            entries, errors = manifest, []
            root = Path(image_root) if image_root else Path.cwd()
        else:
            entries, errors = parse_manifest_lines(manifest)
            root = Path(image_root) if image_root else Path.cwd()
        return entries, errors, root

    def _run_job(self, job_id: str, manifest, collection_id: str,
                 plugins: list[str], parallelism: int, image_root) -> None:
        try:
            features, classifiers = self._resolve_plugins(plugins)
            entries, manifest_errors, root = self._load_entries(manifest, image_root)
        except (StorageError, ValidationError) as exc:
            self.tracker.start(job_id, 0)
            self.tracker.finish(job_id, failed_outright=True, message=exc.message)
            return
        self.tracker.start(job_id, len(entries) + len(manifest_errors))
        for err in manifest_errors:
            self.tracker.record_failure(job_id, err.entry_id, err.message, err.line_no)

        def process(entry: ManifestEntry):
            return self._process_entry(entry, collection_id, features, classifiers, root)

        parallelism = max(1, int(parallelism))
        if parallelism == 1:
            outcomes = map(process, entries)
            self._commit_stream(job_id, entries, outcomes)
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                futures = [pool.submit(process, e) for e in entries]
                self._commit_stream(
                    job_id, entries,
                    (f.result() for f in futures))
        self.tracker.finish(job_id)

    def _commit_stream(self, job_id, entries, outcomes) -> None:
        for entry, outcome in zip(entries, outcomes):
            if isinstance(outcome, _EntryFailure):
                self.tracker.record_failure(job_id, entry.entry_id, outcome.message,
                                            entry.line_no)
                continue
            doc, vectors = outcome
            try:
                self.workspace.commit_entry(doc, vectors)
            except (StorageError, ValidationError) as exc:
                self.tracker.record_failure(job_id, entry.entry_id, exc.message,
                                            entry.line_no)
                continue
            self.tracker.record_success(job_id)

    def _process_entry(self, entry: ManifestEntry, collection_id: str,
                       features: list[str], classifiers: list[str], root: Path):
        try:
            data = self._read_image(entry.image, root)
            inp = ExtractionInput.image(data)
            vectors: dict[str, np.ndarray] = {}
            for plugin in features:
                man = self.workspace.registry.manifest(plugin)
                if IMAGE not in man.modalities:
                    continue
                item = self._with_retries(
                    lambda p=plugin: self.workspace.registry.extract(p, [inp])[0])
                if not item.ok or item.vector is None:
                    raise _EntryFailure(f"plugin {plugin!r}: {item.error or 'no vector'}")
                vectors[plugin] = item.vector
            metadata = dict(entry.metadata)
            for plugin in classifiers:
                output = self._with_retries(
                    lambda p=plugin: self.workspace.registry.classify(p, inp))
                if output.labels:
                    metadata[f"{AUTO_FIELD_PREFIX}{plugin}"] = [kw for kw, _ in output.labels]
            title = None
            title_values = metadata.pop("title", None)
            if title_values:
                if isinstance(title_values, str):
                    title = title_values
                elif isinstance(title_values, (list, tuple)) and title_values:
                    title = str(title_values[0])
            doc = ImageDocument(
                doc_id=entry.entry_id,
                collection_id=collection_id,
                image_ref=entry.display_url or entry.image,
                title=title,
                metadata=metadata,
            )
            return doc, vectors
        except _EntryFailure as exc:
            return exc
        except ValidationError as exc:
            return _EntryFailure(exc.message)

    def _with_retries(self, call):
        last: TransientError | None = None
        for attempt in range(self.retry_attempts):
            try:
                return call()
            except TransientError as exc:
                last = exc
                if attempt + 1 < self.retry_attempts and self.retry_base_delay > 0:
                    time.sleep(self.retry_base_delay * (2 ** attempt))
        raise _EntryFailure(f"transient failure after {self.retry_attempts} attempts: "
                            f"{last.message if last else 'unknown'}")

    @staticmethod
    def _read_image(image: str, root: Path) -> bytes:
        if image.startswith(("http://", "https://")):
            raise _EntryFailure(
                "remote image URLs are not fetched at ingest time; "
                "provide a local path (keep the URL in the 'url' field for display)")
        path = Path(image)
        if not path.is_absolute():
            path = root / path
        try:
            return path.read_bytes()
        except OSError as exc:
            raise _EntryFailure(f"cannot read image file: {exc.strerror or exc}") from exc
