from .base import (
    CLASSIFIER,
    FEATURE,
    IMAGE,
    TEXT,
    ClassifierOutput,
    ExtractionInput,
    ExtractionItem,
    FeatureRecord,
    PluginManifest,
)
from .builtin import (
    BUILTIN_BACKENDS,
    COLORGRAM_DIM,
    HASHPROJ_DIM,
    builtin_backend,
    decode_text_image,
    encode_text_image,
    hashproj_token_vector,
)
from .registry import PluginRegistry
from .remote import RemoteBackend
from .stub_server import FIXTURE_VECTOR, StubInferenceServer

__all__ = [
    "CLASSIFIER",
    "FEATURE",
    "IMAGE",
    "TEXT",
    "ClassifierOutput",
    "ExtractionInput",
    "ExtractionItem",
    "FeatureRecord",
    "PluginManifest",
    "BUILTIN_BACKENDS",
    "COLORGRAM_DIM",
    "HASHPROJ_DIM",
    "builtin_backend",
    "decode_text_image",
    "encode_text_image",
    "hashproj_token_vector",
    "PluginRegistry",
    "RemoteBackend",
    "FIXTURE_VECTOR",
    "StubInferenceServer",
]
