from __future__ import annotations

import numpy as np
import pytest

from artsearch.errors import ValidationError
from artsearch.index import FlatIndex, HnswIndex, load_index, save_index
from artsearch.index.kernels import neg_dot_fast, neg_dot_strict

from oracles import oracle_top_k


def unit_rows(rng, n, dim):
    v = rng.standard_normal((n, dim)).astype(np.float32)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture(scope="module")
def built():
    """One 2000x32 instance shared by read-only tests."""
    rng = np.random.default_rng(42)
    X = unit_rows(rng, 2000, 32)
    ids = [f"doc{i:05d}" for i in range(2000)]
    index = HnswIndex(32, seed=7)
    flat = FlatIndex(32)
    for i in range(2000):
        index.insert(ids[i], X[i])
        flat.insert(ids[i], X[i])
    queries = unit_rows(rng, 30, 32)
    return index, flat, dict(zip(ids, X)), queries


class TestBasics:
    def test_self_retrieval(self, built):
        index, _, vectors, _ = built
        for doc_id in list(vectors)[::211]:
            top = index.search(vectors[doc_id], 1)
            assert top[0].doc_id == doc_id
            assert top[0].similarity == pytest.approx(1.0, abs=1e-6)

    def test_duplicate_insert_replaces(self):
        index = HnswIndex(4, seed=0)
        index.insert("a", np.array([1, 0, 0, 0], dtype=np.float32))
        index.insert("a", np.array([0, 1, 0, 0], dtype=np.float32))
        assert len(index) == 1
        top = index.search(np.array([0, 1, 0, 0], dtype=np.float32), 1)
        assert top[0].doc_id == "a"
        assert top[0].similarity == pytest.approx(1.0, abs=1e-6)

    def test_results_subset_of_ids_with_exact_scores(self, built):
        index, _, vectors, queries = built
        for q in queries[:10]:
            got = index.search(q, 15)
            q64 = q.astype(np.float64)
            for nb in got:
                assert nb.doc_id in vectors
                exact = float(np.dot(vectors[nb.doc_id].astype(np.float64), q64))
                assert nb.similarity == pytest.approx(exact, abs=1e-12)

    def test_empty_index(self):
        index = HnswIndex(8, seed=0)
        assert index.search(np.eye(8, dtype=np.float32)[0], 5) == []

    def test_dimension_validation(self):
        index = HnswIndex(8, seed=0)
        with pytest.raises(ValidationError):
            index.insert("a", np.ones(4, dtype=np.float32) / 2.0)


class TestRecallAndMonotonicity:
    def test_default_recall_reasonable(self, built):
        index, flat, _, queries = built
        recall = 0.0
        for q in queries:
            got = {n.doc_id for n in index.search(q, 10)}
            want = {n.doc_id for n in flat.search(q, 10)}
            recall += len(got & want) / 10
        assert recall / len(queries) >= 0.95

    def test_recall_non_decreasing_in_ef(self, built):
        index, flat, _, queries = built
        truth = [{n.doc_id for n in flat.search(q, 10)} for q in queries]
        recalls = []
        for ef in (16, 32, 64, 128, 256):
            hits = 0
            for q, t in zip(queries, truth):
                hits += len({n.doc_id for n in index.search(q, 10, ef_search=ef)} & t)
            recalls.append(hits)
        assert recalls == sorted(recalls)


class TestFilteredSearch:
    def test_never_returns_outside_allowed(self, built):
        index, _, vectors, queries = built
        rng = np.random.default_rng(0)
        ids = sorted(vectors)
        for q in queries[:5]:
            allowed = set(rng.choice(ids, size=200, replace=False).tolist())
            got = index.search(q, 10, allowed=allowed)
            assert {n.doc_id for n in got} <= allowed

    def test_small_fraction_falls_back_to_exact(self, built):
        index, _, vectors, queries = built
        ids = sorted(vectors)
        allowed = set(ids[:15])  # < 1% of 2000
        q = queries[0]
        got = index.search(q, 10, allowed=allowed)
        want = oracle_top_k(vectors, q, 10, allowed=allowed)
        assert [(n.doc_id, pytest.approx(n.similarity, abs=1e-12)) for n in got] == \
               [(d, pytest.approx(s, abs=1e-12)) for d, s in want]

    def test_allowed_full_set_close_to_unfiltered(self, built):
        index, _, vectors, queries = built
        q = queries[1]
        unfiltered = [n.doc_id for n in index.search(q, 10)]
        filtered = [n.doc_id for n in index.search(q, 10, allowed=set(vectors))]
        assert set(filtered) == set(unfiltered)

    def test_empty_allowed(self, built):
        index, _, _, queries = built
        assert index.search(queries[0], 5, allowed=set()) == []


class TestDeletes:
    def test_delete_never_returned(self):
        rng = np.random.default_rng(9)
        X = unit_rows(rng, 300, 16)
        index = HnswIndex(16, seed=1)
        ids = [f"d{i:04d}" for i in range(300)]
        for i in range(300):
            index.insert(ids[i], X[i])
        for victim in ids[::7]:
            index.delete(victim)
        deleted = set(ids[::7])
        for q in unit_rows(rng, 10, 16):
            got = {n.doc_id for n in index.search(q, 50)}
            assert not (got & deleted)

    def test_compaction_preserves_live_set(self):
        rng = np.random.default_rng(10)
        X = unit_rows(rng, 200, 8)
        index = HnswIndex(8, seed=2)
        ids = [f"d{i:04d}" for i in range(200)]
        for i in range(200):
            index.insert(ids[i], X[i])
        for victim in ids[:120]:
            index.delete(victim)
        index.compact()
        assert len(index) == 80
        assert index.ids() == sorted(ids[120:])
        survivor = ids[150]
        top = index.search(X[150], 1)
        assert top[0].doc_id == survivor


class TestPersistence:
    def test_round_trip_identical_neighbor_lists(self, built, tmp_path):
        index, _, _, queries = built
        before = [[(n.doc_id, n.similarity) for n in index.search(q, 10, ef_search=128)]
                  for q in queries]
        save_index(index, tmp_path / "g.vec")
        loaded = load_index(tmp_path / "g.vec")
        after = [[(n.doc_id, n.similarity) for n in loaded.search(q, 10, ef_search=128)]
                 for q in queries]
        assert before == after

    def test_round_trip_preserves_future_inserts(self, tmp_path):
        rng = np.random.default_rng(11)
        X = unit_rows(rng, 120, 8)
        a = HnswIndex(8, seed=3)
        for i in range(100):
            a.insert(f"d{i:04d}", X[i])
        save_index(a, tmp_path / "a.vec")
        b = load_index(tmp_path / "a.vec")
        for i in range(100, 120):
            a.insert(f"d{i:04d}", X[i])
            b.insert(f"d{i:04d}", X[i])
        q = unit_rows(rng, 1, 8)[0]
        assert [(n.doc_id, n.similarity) for n in a.search(q, 10)] == \
               [(n.doc_id, n.similarity) for n in b.search(q, 10)]


def test_fast_kernel_matches_strict_scalar():
    """Differential check of the fused/fastmath distance kernel."""
    rng = np.random.default_rng(12)
    vectors = unit_rows(rng, 64, 128)
    for i in range(0, 64, 7):
        q = vectors[(i + 31) % 64]
        fast = float(neg_dot_fast(vectors, i, q))
        strict = float(neg_dot_strict(vectors, i, q))
        assert fast == pytest.approx(strict, abs=1e-5)
