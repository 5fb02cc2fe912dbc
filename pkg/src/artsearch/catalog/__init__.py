from .store import Catalog, CatalogView, load_facet_config
from .types import (
    CATEGORICAL,
    NUMERIC_YEAR,
    FacetDefinition,
    FacetFilter,
    ImageDocument,
    parse_year,
)

__all__ = [
    "Catalog",
    "CatalogView",
    "load_facet_config",
    "CATEGORICAL",
    "NUMERIC_YEAR",
    "FacetDefinition",
    "FacetFilter",
    "ImageDocument",
    "parse_year",
]
