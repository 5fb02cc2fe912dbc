from .flat import FlatIndex, Neighbor
from .hnsw import HnswIndex
from .io import load_index, save_index

VectorIndex = FlatIndex | HnswIndex


def make_index(structure: str, dim: int, plugin_name: str = "", **params) -> "VectorIndex":
    if structure == "flat":
        return FlatIndex(dim, plugin_name)
    if structure == "graph":
        return HnswIndex(dim, plugin_name, **params)
    from ..errors import ValidationError

    raise ValidationError(f"unknown index structure {structure!r}")


__all__ = ["FlatIndex", "HnswIndex", "Neighbor", "VectorIndex",
           "load_index", "save_index", "make_index"]
