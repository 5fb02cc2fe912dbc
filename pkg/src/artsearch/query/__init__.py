from .engine import QueryEngine
from .spec import (
    CANVAS,
    CLUSTERS,
    GRID,
    LAYOUT_CAP,
    MAX_PAGE_LIMIT,
    LayoutSpec,
    QuerySpec,
    QueryTerm,
    ResultEntry,
    ResultPage,
)

__all__ = [
    "QueryEngine",
    "LayoutSpec",
    "QuerySpec",
    "QueryTerm",
    "ResultEntry",
    "ResultPage",
    "GRID",
    "CLUSTERS",
    "CANVAS",
    "LAYOUT_CAP",
    "MAX_PAGE_LIMIT",
]
