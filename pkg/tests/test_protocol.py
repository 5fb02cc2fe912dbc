"""Inference wire protocol: stub server round-trips, error mapping."""

from __future__ import annotations

import numpy as np
import pytest

from artsearch.errors import RegistrationError, TransientError, ValidationError
from artsearch.plugins import (
    FIXTURE_VECTOR,
    ExtractionInput,
    PluginManifest,
    PluginRegistry,
    StubInferenceServer,
    builtin_backend,
    encode_text_image,
)
from artsearch.plugins.remote import RemoteBackend

from conftest import solid_png


@pytest.fixture(scope="module")
def stub():
    with StubInferenceServer() as server:
        yield server


def remote_manifest(name: str, dim: int) -> PluginManifest:
    return PluginManifest(name=name, version="0", modalities=frozenset({"image", "text"}),
                          vector_dim=dim)


class TestHealth:
    def test_health_lists_plugins(self, stub):
        backend = RemoteBackend("fixture", stub.endpoint)
        assert backend.manifest.name == "fixture"
        assert backend.manifest.vector_dim == 8
        backend.close()

    def test_unreachable_endpoint_is_registration_error(self):
        with pytest.raises(RegistrationError):
            RemoteBackend("fixture", "http://127.0.0.1:1", timeout=0.5)

    def test_unknown_plugin_not_served(self, stub):
        with pytest.raises(RegistrationError):
            RemoteBackend("no-such-plugin", stub.endpoint)


class TestRoundTrip:
    def test_fixture_vector_echoed(self, stub):
        reg = PluginRegistry()
        reg.register_plugin(stub.endpoint, remote_manifest("fixture", 8))
        items = reg.extract("fixture", [ExtractionInput.text("anything at all")])
        np.testing.assert_array_equal(items[0].vector, FIXTURE_VECTOR)

    def test_bit_exact_float32_identity(self, stub):
        """Serialize -> HTTP -> parse is the identity on float32 vectors."""
        reg = PluginRegistry()
        reg.register_plugin(stub.endpoint, remote_manifest("hashproj", 64))
        local = builtin_backend("hashproj")
        for payload in ["crucifixion", "saint sebastian arrows", "üßé tokens"]:
            inp = ExtractionInput.text(payload)
            remote_vec = reg.extract("hashproj", [inp])[0].vector
            local_vec = local.extract_one(ExtractionInput.text(payload))
            assert remote_vec.dtype == np.float32
            np.testing.assert_array_equal(remote_vec, local_vec)

    def test_image_round_trip(self, stub):
        reg = PluginRegistry()
        reg.register_plugin(stub.endpoint, remote_manifest("hashproj", 64))
        data = encode_text_image("harbor ships")
        remote_vec = reg.extract("hashproj", [ExtractionInput.image(data)])[0].vector
        local_vec = builtin_backend("hashproj").extract_one(ExtractionInput.image(data))
        np.testing.assert_array_equal(remote_vec, local_vec)

    def test_batch_order_preserved(self, stub):
        reg = PluginRegistry()
        reg.register_plugin(stub.endpoint, remote_manifest("hashproj", 64))
        inputs = [ExtractionInput.text(t) for t in ["one", "two", "three"]]
        batch = reg.extract("hashproj", inputs)
        local = builtin_backend("hashproj")
        for inp_text, item in zip(["one", "two", "three"], batch):
            np.testing.assert_array_equal(
                item.vector, local.extract_one(ExtractionInput.text(inp_text)))

    def test_fixture_labels_passed_through(self, stub):
        from artsearch.plugins.stub_server import FIXTURE_LABELS

        reg = PluginRegistry()
        man = PluginManifest(name="red-threshold", version="0",
                             modalities=frozenset({"image"}), vector_dim=1)
        reg.register_plugin(stub.endpoint, man)
        out = reg.classify("red-threshold", ExtractionInput.image(solid_png((255, 0, 0))))
        assert ("red", 1.0) in out.labels
        assert FIXTURE_LABELS  # documented in the stub module


class TestErrors:
    def test_dim_conflict_at_registration(self, stub):
        reg = PluginRegistry()
        with pytest.raises(ValidationError):
            reg.register_plugin(stub.endpoint, remote_manifest("fixture", 16))

    def test_validation_maps_to_validation_error(self, stub):
        reg = PluginRegistry()
        reg.register_plugin(stub.endpoint, remote_manifest("colorgram", 48))
        # colorgram is image-only; text input fails the modality precheck locally
        with pytest.raises(ValidationError):
            reg.extract("colorgram", [ExtractionInput.text("x")])

    def test_transient_503_maps_to_transient_error(self):
        with StubInferenceServer(transient_failures=1) as flaky:
            reg = PluginRegistry()
            reg.register_plugin(flaky.endpoint, remote_manifest("fixture", 8))
            with pytest.raises(TransientError):
                reg.extract("fixture", [ExtractionInput.text("x")])
            ok = reg.extract("fixture", [ExtractionInput.text("x")])
            np.testing.assert_array_equal(ok[0].vector, FIXTURE_VECTOR)

    def test_remote_cache_hits_skip_network(self, stub, tmp_path):
        reg = PluginRegistry(cache_path=tmp_path / "c.jsonl")
        reg.register_plugin(stub.endpoint, remote_manifest("fixture", 8))
        reg.extract("fixture", [ExtractionInput.text("cache me")])
        assert reg.backend_calls["fixture"] == 1
        reg.extract("fixture", [ExtractionInput.text("cache me")])
        assert reg.backend_calls["fixture"] == 1
        reg.close()
