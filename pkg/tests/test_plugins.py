from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artsearch.errors import ValidationError
from artsearch.plugins import (
    BUILTIN_BACKENDS,
    ExtractionInput,
    PluginManifest,
    PluginRegistry,
    builtin_backend,
    decode_text_image,
    encode_text_image,
)
from artsearch.plugins.base import FeatureRecord

from conftest import solid_png
from oracle_hashproj_reference import reference_text_vector


class TestExtractionInput:
    def test_text_trim_invariant(self):
        with pytest.raises(ValidationError):
            ExtractionInput.text("   \n\t ")

    def test_tiny_image_rejected(self):
        with pytest.raises(ValidationError):
            ExtractionInput.image(solid_png((255, 0, 0), size=4)).image_array()

    def test_garbage_image_rejected(self):
        with pytest.raises(ValidationError):
            ExtractionInput.image(b"definitely not an image").image_array()

    def test_content_hash_distinguishes_kinds(self):
        a = ExtractionInput.text("abc")
        b = ExtractionInput.image(b"abc" * 10)
        assert a.content_hash() != b.content_hash()


class TestColorgram:
    def test_pure_red_mass_in_red_positions(self):
        backend = builtin_backend("colorgram")
        vec = backend.extract_one(ExtractionInput.image(solid_png((255, 0, 0))))
        assert vec.shape == (48,)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)
        red = vec.reshape(16, 3)[:, 0]
        green_blue = vec.reshape(16, 3)[:, 1:]
        assert red.sum() == pytest.approx(1.0 * np.linalg.norm(red) * 4, rel=1e-3)
        assert np.abs(green_blue).sum() == pytest.approx(0.0, abs=1e-6)

    def test_black_image_degenerate_uniform(self):
        backend = builtin_backend("colorgram")
        vec = backend.extract_one(ExtractionInput.image(solid_png((0, 0, 0))))
        assert np.allclose(vec, 1.0 / np.sqrt(48), atol=1e-6)

    def test_text_unsupported(self):
        reg = PluginRegistry()
        reg.register_builtins(["colorgram"])
        with pytest.raises(ValidationError):
            reg.extract("colorgram", [ExtractionInput.text("hello")])


class TestHashproj:
    def test_matches_reference_oracle_script(self):
        backend = builtin_backend("hashproj")
        got = backend.extract_one(ExtractionInput.text("crucifixion"))
        want = reference_text_vector("crucifixion")
        assert got.dtype == np.float32
        np.testing.assert_array_equal(got, want)

    def test_reference_oracle_multi_token(self):
        backend = builtin_backend("hashproj")
        text = "saint sebastian pierced by arrows"
        np.testing.assert_array_equal(
            backend.extract_one(ExtractionInput.text(text)),
            reference_text_vector(text))

    def test_cross_modal_pairing(self):
        backend = builtin_backend("hashproj")
        for text in ["crucifixion", "saint sebastian arrows",
                     "windmill landscape", "Nachtwache der Schützen"]:
            tv = backend.extract_one(ExtractionInput.text(text)).astype(np.float64)
            iv = backend.extract_one(
                ExtractionInput.image(encode_text_image(text))).astype(np.float64)
            assert float(tv @ iv) >= 0.99

    def test_plain_image_deterministic(self):
        backend = builtin_backend("hashproj")
        img = solid_png((10, 200, 30))
        a = backend.extract_one(ExtractionInput.image(img))
        b = backend.extract_one(ExtractionInput.image(img))
        np.testing.assert_array_equal(a, b)

    def test_stego_round_trip(self):
        from artsearch.plugins.base import ExtractionInput as EI

        text = "Üppige Blumen im Schatten"
        arr = EI.image(encode_text_image(text)).image_array()
        assert decode_text_image(arr) == text


class TestClassifier:
    def test_red_dominant_rule(self):
        reg = PluginRegistry()
        reg.register_builtins(["red-threshold"])
        out = reg.classify("red-threshold", ExtractionInput.image(solid_png((255, 0, 0))))
        labels = dict(out.labels)
        assert labels.get("red", 0.0) >= 0.9

    def test_labels_sorted_and_unique(self):
        reg = PluginRegistry()
        reg.register_builtins(["red-threshold"])
        out = reg.classify("red-threshold",
                           ExtractionInput.image(solid_png((250, 240, 230))))
        confs = [c for _, c in out.labels]
        assert confs == sorted(confs, reverse=True)
        assert len({k for k, _ in out.labels}) == len(out.labels)

    def test_non_classifier_kind_error(self):
        reg = PluginRegistry()
        reg.register_builtins(["colorgram"])
        with pytest.raises(ValidationError):
            reg.classify("colorgram", ExtractionInput.image(solid_png((1, 2, 3))))


class TestRegistry:
    def test_register_and_list(self):
        reg = PluginRegistry()
        reg.register_plugin("builtin:colorgram")
        manifests = {m.name: m for m in reg.list_plugins()}
        assert manifests["colorgram"].vector_dim == 48

    def test_dimension_conflict(self):
        reg = PluginRegistry()
        reg.register_plugin("builtin:colorgram")
        clash = PluginManifest(name="colorgram", version="2", modalities=frozenset({"image"}),
                               vector_dim=64)
        with pytest.raises(ValidationError):
            reg.register_plugin("builtin:colorgram", clash)

    def test_unknown_builtin(self):
        reg = PluginRegistry()
        with pytest.raises(ValidationError):
            reg.register_plugin("builtin:nope")

    def test_batching_transparency(self):
        reg = PluginRegistry()
        reg.register_builtins(["hashproj"])
        a = ExtractionInput.text("alpha beta")
        b = ExtractionInput.text("gamma")
        batch = reg.extract("hashproj", [a, b])
        single_a = reg.extract("hashproj", [ExtractionInput.text("alpha beta")])
        single_b = reg.extract("hashproj", [ExtractionInput.text("gamma")])
        np.testing.assert_array_equal(batch[0].vector, single_a[0].vector)
        np.testing.assert_array_equal(batch[1].vector, single_b[0].vector)

    def test_order_preserved_with_per_item_error(self):
        reg = PluginRegistry()
        reg.register_builtins(["colorgram"])
        good = ExtractionInput.image(solid_png((0, 0, 255)))
        bad = ExtractionInput.image(b"broken bytes")
        items = reg.extract("colorgram", [good, bad, good])
        assert items[0].ok and items[2].ok
        assert not items[1].ok and "decode" in items[1].error
        np.testing.assert_array_equal(items[0].vector, items[2].vector)

    def test_cache_counts_backend_calls(self, tmp_path):
        reg = PluginRegistry(cache_path=tmp_path / "cache.jsonl")
        reg.register_builtins(["hashproj"])
        inp = ExtractionInput.text("cached phrase")
        reg.extract("hashproj", [inp])
        assert reg.backend_calls.get("hashproj") == 1
        again = reg.extract("hashproj", [ExtractionInput.text("cached phrase")])
        assert reg.backend_calls.get("hashproj") == 1
        assert again[0].cached
        reg.close()
        fresh = PluginRegistry(cache_path=tmp_path / "cache.jsonl")
        fresh.register_builtins(["hashproj"])
        reloaded = fresh.extract("hashproj", [ExtractionInput.text("cached phrase")])
        assert fresh.backend_calls.get("hashproj") is None
        assert reloaded[0].cached
        fresh.close()


class TestFeatureRecord:
    def test_normalization_enforced(self):
        rec = FeatureRecord(doc_id="d", plugin_name="p", plugin_version="1",
                            vector=np.array([3.0, 4.0], dtype=np.float32))
        assert np.linalg.norm(rec.vector) == pytest.approx(1.0, abs=1e-4)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValidationError):
            FeatureRecord(doc_id="d", plugin_name="p", plugin_version="1",
                          vector=np.zeros(4, dtype=np.float32))

    def test_annotations_sorted(self):
        rec = FeatureRecord(doc_id="d", plugin_name="p", plugin_version="1",
                            vector=np.array([1.0, 0.0]),
                            annotations=[("a", 0.2), ("b", 0.9)])
        assert rec.annotations == [("b", 0.9), ("a", 0.2)]


@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_every_builtin_emits_unit_vectors(data):
    """Normalization invariant, property-tested over random inputs."""
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    text = " ".join(data.draw(st.lists(
        st.text(alphabet="abcdefghijklmnop", min_size=1, max_size=8),
        min_size=1, max_size=6)))
    rgb = tuple(int(x) for x in rng.integers(0, 256, size=3))
    for name, cls in BUILTIN_BACKENDS.items():
        backend = cls()
        if backend.manifest.kind != "feature":
            continue
        inputs = []
        if "text" in backend.manifest.modalities and text.strip():
            inputs.append(ExtractionInput.text(text))
        if "image" in backend.manifest.modalities:
            inputs.append(ExtractionInput.image(solid_png(rgb)))
            inputs.append(ExtractionInput.image(encode_text_image(text or "x")))
        for inp in inputs:
            vec = backend.extract_one(inp)
            assert vec.shape == (backend.manifest.vector_dim,)
            assert abs(float(np.linalg.norm(vec.astype(np.float64))) - 1.0) <= 1e-4
