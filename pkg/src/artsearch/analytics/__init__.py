from .embed2d import neighbor_embed_2d
from .kmeans import ClusterAssignment, default_cluster_count, kmeans
from .pca import Projection2D, pca2d

__all__ = [
    "ClusterAssignment",
    "Projection2D",
    "default_cluster_count",
    "kmeans",
    "neighbor_embed_2d",
    "pca2d",
]
