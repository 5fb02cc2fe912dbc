from __future__ import annotations

import json
import time

import numpy as np
import pytest

from artsearch.errors import TransientError
from artsearch.ingest import COMPLETED, FAILED, PARTIAL
from artsearch.plugins import encode_text_image
from artsearch.plugins.base import ExtractionItem
from artsearch.plugins.builtin import HashprojBackend
from artsearch.workspace import Workspace

from conftest import default_facets, query_battery, synth_corpus


def small_manifest(tmp_path, name="small", corrupt: set[str] = frozenset()):
    img_dir = tmp_path / f"{name}-img"
    img_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, text in enumerate(["saint sebastian", "windmill sky", "harbor ships"]):
        doc_id = f"{name}-{i}"
        path = img_dir / f"{doc_id}.png"
        if doc_id in corrupt:
            path.write_bytes(b"this is not a png")
        else:
            path.write_bytes(encode_text_image(text))
        lines.append(json.dumps({"id": doc_id, "image": str(path),
                                 "metadata": {"title": [text], "artist": ["x"]}}))
    manifest = tmp_path / f"{name}.jsonl"
    manifest.write_text("\n".join(lines))
    return manifest


class TestBasicIngest:
    def test_three_valid_entries(self, workspace, tmp_path):
        manifest = small_manifest(tmp_path)
        job = workspace.ingest(manifest, "c", ["colorgram", "hashproj"])
        assert job.state == COMPLETED
        assert (job.processed, job.failed, job.total) == (3, 0, 3)
        assert len(workspace.catalog) == 3
        assert len(workspace.indexes["hashproj"]) == 3
        assert len(workspace.indexes["colorgram"]) == 3

    def test_corrupt_entry_isolated(self, workspace, tmp_path):
        manifest = small_manifest(tmp_path, corrupt={"small-1"})
        job = workspace.ingest(manifest, "c", ["colorgram", "hashproj"])
        assert job.state == PARTIAL
        assert (job.processed, job.failed) == (2, 1)
        assert any(e["entry_id"] == "small-1" for e in job.errors)
        assert sorted(workspace.catalog.doc_ids()) == ["small-0", "small-2"]

    def test_unreadable_manifest_fails_job(self, workspace, tmp_path):
        job = workspace.ingest(tmp_path / "missing.jsonl", "c", ["hashproj"])
        assert job.state == FAILED

    def test_malformed_lines_reported(self, workspace, tmp_path):
        manifest = small_manifest(tmp_path, name="mixed")
        content = manifest.read_text() + "\nnot json at all\n" + json.dumps(
            {"image": "x.png"})
        manifest.write_text(content)
        job = workspace.ingest(manifest, "c", ["hashproj"])
        assert job.state == PARTIAL
        assert job.processed == 3
        assert job.failed == 2

    def test_classifier_labels_become_facets(self, workspace, tmp_path):
        img_dir = tmp_path / "cls-img"
        img_dir.mkdir()
        from conftest import solid_png

        path = img_dir / "red.png"
        path.write_bytes(solid_png((255, 0, 0)))
        manifest = tmp_path / "cls.jsonl"
        manifest.write_text(json.dumps({"id": "red-doc", "image": str(path),
                                        "metadata": {"title": ["Red square"]}}))
        job = workspace.ingest(manifest, "c", ["colorgram", "red-threshold"])
        assert job.state == COMPLETED
        doc = workspace.catalog.get("red-doc")
        assert "red" in doc.metadata.get("auto:red-threshold", [])
        counts = workspace.catalog.facet_counts([], "auto:red-threshold")
        assert counts.get("red") == 1


class TestJobTracking:
    def test_unknown_job(self, workspace):
        from artsearch.errors import NotFoundError

        with pytest.raises(NotFoundError):
            workspace.jobs.get("job-999999")

    def test_poll_monotone_counters(self, workspace, tmp_path):
        manifest, _ = synth_corpus(tmp_path, 30, seed=3, name="poll")
        job = workspace.start_ingest(manifest, "c", ["hashproj"], parallelism=2)
        seen = []
        while True:
            snap = workspace.jobs.get(job.job_id)
            seen.append((snap.processed, snap.failed))
            if snap.state not in ("pending", "running"):
                break
            time.sleep(0.01)
        for (p0, f0), (p1, f1) in zip(seen, seen[1:]):
            assert p1 >= p0 and f1 >= f0
        final = workspace.jobs.get(job.job_id)
        assert final.state == COMPLETED
        assert final.processed == final.total == 30

    def test_terminal_state_immutable(self, workspace, tmp_path):
        manifest = small_manifest(tmp_path, name="term")
        job = workspace.ingest(manifest, "c", ["hashproj"])
        from artsearch.errors import ValidationError

        with pytest.raises(ValidationError):
            workspace.jobs.record_success(job.job_id)


class TestIdempotence:
    def test_re_ingest_zero_backend_calls(self, workspace, tmp_path):
        manifest, _ = synth_corpus(tmp_path, 20, seed=4, name="idem")
        plugins = ["colorgram", "hashproj", "red-threshold"]
        job1 = workspace.ingest(manifest, "c", plugins)
        assert job1.state == COMPLETED
        before = query_battery(workspace)
        calls_before = dict(workspace.registry.backend_calls)
        job2 = workspace.ingest(manifest, "c", plugins)
        assert job2.state == COMPLETED
        assert workspace.registry.backend_calls == calls_before
        assert query_battery(workspace) == before

    def test_cache_survives_reopen(self, tmp_path):
        manifest, _ = synth_corpus(tmp_path, 10, seed=6, name="reopen")
        with Workspace(tmp_path / "ws", facets=default_facets()) as ws:
            ws.register_builtins()
            ws.ingest(manifest, "c", ["hashproj"])
            battery = query_battery(ws)
        with Workspace(tmp_path / "ws", facets=default_facets()) as ws2:
            ws2.register_builtins()
            job = ws2.ingest(manifest, "c", ["hashproj"])
            assert job.state == COMPLETED
            assert ws2.registry.backend_calls.get("hashproj") is None
            assert query_battery(ws2) == battery


class TestParallelism:
    def test_one_vs_n_workers_identical_state(self, tmp_path):
        manifest, _ = synth_corpus(tmp_path, 40, seed=7, name="par")
        batteries = []
        for workers, slot in [(1, "w1"), (8, "w8")]:
            with Workspace(tmp_path / slot, facets=default_facets()) as ws:
                ws.register_builtins()
                job = ws.ingest(manifest, "c",
                                ["colorgram", "hashproj", "red-threshold"],
                                parallelism=workers)
                assert job.state == COMPLETED
                batteries.append(query_battery(ws))
        assert batteries[0] == batteries[1]


class TestRetriesAndResume:
    def test_transient_retries_then_success(self, tmp_path, monkeypatch):
        attempts = {"n": 0}
        original = HashprojBackend.extract_one

        def flaky(self, inp):
            attempts["n"] += 1
            if attempts["n"] <= 2:
                raise TransientError("synthetic hiccup")
            return original(self, inp)

        monkeypatch.setattr(HashprojBackend, "extract_one", flaky)
        # TransientError must escape extract_batch for the retry loop to see it
        monkeypatch.setattr(
            HashprojBackend, "extract_batch",
            lambda self, inputs: [ExtractionItem(vector=self.extract_one(inp))
                                  for inp in inputs])
        ws = Workspace(tmp_path / "retry", facets=default_facets(), retry_base_delay=0.0)
        ws.register_builtins()
        manifest = small_manifest(tmp_path, name="retry")
        job = ws.ingest(manifest, "c", ["hashproj"])
        assert job.state == COMPLETED
        ws.close()

    def test_transient_exhaustion_fails_entry(self, tmp_path, monkeypatch):
        def always_fail(self, inputs):
            raise TransientError("backend down")

        monkeypatch.setattr(HashprojBackend, "extract_batch", always_fail)
        ws = Workspace(tmp_path / "down", facets=default_facets(), retry_base_delay=0.0)
        ws.register_builtins()
        manifest = small_manifest(tmp_path, name="down")
        job = ws.ingest(manifest, "c", ["hashproj"])
        assert job.state == FAILED
        assert job.failed == 3
        assert all("transient failure after 3 attempts" in e["message"]
                   for e in job.errors)
        ws.close()

    def test_interrupted_run_converges_on_retry(self, tmp_path, monkeypatch):
        """A run that dies partway re-runs to the same final state as a
        clean single run (verified by the query battery)."""
        manifest, _ = synth_corpus(tmp_path, 25, seed=8, name="crash")

        with Workspace(tmp_path / "clean", facets=default_facets()) as clean:
            clean.register_builtins()
            assert clean.ingest(manifest, "c", ["colorgram", "hashproj"]).state == COMPLETED
            want = query_battery(clean)

        calls = {"n": 0}
        original = HashprojBackend.extract_one

        def dies_after_ten(self, inp):
            calls["n"] += 1
            if calls["n"] > 10:
                raise TransientError("simulated crash")
            return original(self, inp)

        ws = Workspace(tmp_path / "crash-ws", facets=default_facets(),
                       retry_base_delay=0.0)
        ws.register_builtins()
        with monkeypatch.context() as m:
            m.setattr(HashprojBackend, "extract_one", dies_after_ten)
            m.setattr(
                HashprojBackend, "extract_batch",
                lambda self, inputs: [ExtractionItem(vector=self.extract_one(inp))
                                      for inp in inputs])
            first = ws.ingest(manifest, "c", ["colorgram", "hashproj"])
        assert first.state == PARTIAL
        assert first.failed > 0
        second = ws.ingest(manifest, "c", ["colorgram", "hashproj"])
        assert second.state == COMPLETED
        assert query_battery(ws) == want
        ws.close()


class TestAtomicVisibility:
    def test_doc_never_searchable_with_partial_vectors(self, workspace, tmp_path):
        manifest, _ = synth_corpus(tmp_path, 15, seed=9, name="atomic")
        import threading

        violations = []
        stop = threading.Event()

        def probe():
            while not stop.is_set():
                snapshot = workspace.snapshot()
                for doc_id in snapshot.doc_ids():
                    in_h = doc_id in workspace.indexes["hashproj"]
                    in_c = doc_id in workspace.indexes["colorgram"]
                    if not (in_h and in_c):
                        violations.append(doc_id)

        t = threading.Thread(target=probe)
        t.start()
        job = workspace.ingest(manifest, "c", ["colorgram", "hashproj"], parallelism=4)
        stop.set()
        t.join()
        assert job.state == COMPLETED
        assert violations == []
