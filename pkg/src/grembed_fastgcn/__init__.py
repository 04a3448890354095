"""Image classification via attributed region graphs, dissimilarity-space
embedding, and importance-sampled graph convolutional networks."""

__version__ = "0.1.0"

from .config import RunConfig, preset_config
from .types import Arsrg, DatasetGraph, Descriptor, DistanceMatrix, GcnModel, Region, validate_arsrg

__all__ = [
    "Arsrg",
    "DatasetGraph",
    "Descriptor",
    "DistanceMatrix",
    "GcnModel",
    "Region",
    "RunConfig",
    "preset_config",
    "validate_arsrg",
    "__version__",
]
