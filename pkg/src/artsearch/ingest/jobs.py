"""Ingest job bookkeeping: states, counters, per-entry error logs."""

from __future__ import annotations

import datetime as dt
import itertools
import threading
from dataclasses import dataclass, field

from ..errors import NotFoundError, ValidationError

PENDING = "pending"
RUNNING = "running"
COMPLETED = "completed"
FAILED = "failed"
PARTIAL = "partially-completed"

_TERMINAL = {COMPLETED, FAILED, PARTIAL}


@dataclass
class IngestJob:
    job_id: str
    state: str = PENDING
    total: int = 0
    processed: int = 0
    failed: int = 0
    errors: list[dict] = field(default_factory=list)
    started_at: dt.datetime | None = None
    finished_at: dt.datetime | None = None

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "total": self.total,
            "processed": self.processed,
            "failed": self.failed,
            "errors": list(self.errors),
            "started_at": self.started_at.isoformat() if self.started_at else None,
            "finished_at": self.finished_at.isoformat() if self.finished_at else None,
        }


class JobTracker:
    """Thread-safe job registry; terminal states are immutable."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, IngestJob] = {}
        self._seq = itertools.count(1)

    def create(self, total: int = 0) -> IngestJob:
        with self._lock:
            job = IngestJob(job_id=f"job-{next(self._seq):06d}", total=total)
            self._jobs[job.job_id] = job
            return job

    def get(self, job_id: str) -> IngestJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"job {job_id!r} not found")
            # shallow snapshot so pollers never see mid-update state
            return IngestJob(
                job_id=job.job_id, state=job.state, total=job.total,
                processed=job.processed, failed=job.failed,
                errors=list(job.errors), started_at=job.started_at,
                finished_at=job.finished_at,
            )

    def _mutable(self, job_id: str) -> IngestJob:
        job = self._jobs[job_id]
        if job.state in _TERMINAL:
            raise ValidationError(f"job {job_id!r} is already {job.state}")
        return job

    def start(self, job_id: str, total: int) -> None:
        with self._lock:
            job = self._mutable(job_id)
            job.state = RUNNING
            job.total = total
            job.started_at = dt.datetime.now(dt.timezone.utc)

    def record_success(self, job_id: str) -> None:
        with self._lock:
            self._mutable(job_id).processed += 1

    def record_failure(self, job_id: str, entry_id: str | None, message: str,
                       line_no: int | None = None) -> None:
        with self._lock:
            job = self._mutable(job_id)
            job.failed += 1
            job.errors.append({"entry_id": entry_id, "message": message, "line": line_no})

    def finish(self, job_id: str, *, failed_outright: bool = False,
               message: str | None = None) -> None:
        with self._lock:
            job = self._mutable(job_id)
            job.finished_at = dt.datetime.now(dt.timezone.utc)
            if failed_outright:
                job.state = FAILED
                if message:
                    job.errors.append({"entry_id": None, "message": message, "line": None})
            elif job.failed == 0:
                job.state = COMPLETED
            elif job.processed > 0:
                job.state = PARTIAL
            else:
                job.state = FAILED
