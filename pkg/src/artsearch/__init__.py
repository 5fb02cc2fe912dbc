"""Self-contained multimodal search engine for art-historical image
collections: plug-in extractors behind an inference wire protocol,
per-plugin vector indexes (exact and graph ANN), weighted multi-reference
cross-modal query fusion, faceted filtering, and k-means / 2D-projection
result layouts, exposed through an HTTP service and a CLI.
"""

from .workspace import Workspace

__version__ = "0.1.0"

__all__ = ["Workspace", "__version__"]
