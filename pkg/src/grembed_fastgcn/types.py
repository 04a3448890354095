"""Domain types shared by every pipeline stage, plus structural validation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Descriptor:
    """A local keypoint descriptor anchored at a sub-pixel position."""

    vector: np.ndarray  # real[D], L2-normalized
    position: tuple[float, float]  # (x, y) in pixels, post-resize coordinates
    scale: float
    orientation: float  # radians

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=np.float64))


@dataclass(frozen=True)
class Region:
    id: int
    pixel_count: int
    centroid: tuple[float, float]  # (x, y)
    mean_color: tuple[float, float, float]  # RGB in [0,1]
    descriptor_ids: tuple[int, ...]


@dataclass(frozen=True)
class Arsrg:
    """Three-level attributed graph: implicit root, region adjacency nodes,
    per-region descriptor leaves."""

    image_id: str
    label: Optional[int]
    regions: tuple[Region, ...]
    region_edges: frozenset[tuple[int, int]]  # unordered pairs stored as (min, max)
    descriptors: tuple[Descriptor, ...]

    def descriptor_count(self) -> int:
        return len(self.descriptors)


def validate_arsrg(g: Arsrg) -> list[str]:
    """Check every Arsrg invariant; violations are returned as data, never raised."""
    violations: list[str] = []
    region_ids = {r.id for r in g.regions}
    if len(region_ids) != len(g.regions):
        violations.append("duplicate region ids")
    for i, j in sorted(g.region_edges):
        if i == j:
            violations.append(f"self-loop edge on region {i}")
        if i not in region_ids:
            violations.append(f"edge references missing region {i}")
        if j not in region_ids:
            violations.append(f"edge references missing region {j}")
    seen: dict[int, int] = {}
    for r in g.regions:
        if r.pixel_count < 1:
            violations.append(f"region {r.id} has pixel_count {r.pixel_count} < 1")
        for c in r.mean_color:
            if not (0.0 <= c <= 1.0):
                violations.append(f"region {r.id} mean_color component {c} outside [0,1]")
                break
        for d in r.descriptor_ids:
            if d < 0 or d >= len(g.descriptors):
                violations.append(f"region {r.id} references missing descriptor {d}")
            elif d in seen:
                violations.append(
                    f"descriptor {d} assigned to regions {seen[d]} and {r.id}"
                )
            else:
                seen[d] = r.id
    for d in range(len(g.descriptors)):
        if d not in seen:
            violations.append(f"descriptor {d} assigned to no region")
    for d, desc in enumerate(g.descriptors):
        if not np.all(np.isfinite(desc.vector)):
            violations.append(f"descriptor {d} has non-finite components")
    return violations


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise graph distances in [0,1].

    Row i doubles as the dissimilarity-embedding vector of image i when the
    prototype set is the whole collection.
    """

    names: tuple[str, ...]
    values: np.ndarray  # real[n][n]

    @property
    def n(self) -> int:
        return len(self.names)

    def check(self) -> None:
        v = self.values
        n = self.n
        if v.shape != (n, n):
            raise ValueError(f"values shape {v.shape} does not match {n} names")
        if not np.allclose(np.diag(v), 0.0, atol=0.0):
            raise ValueError("distance matrix diagonal must be exactly zero")
        if not np.array_equal(v, v.T):
            raise ValueError("distance matrix must be exactly symmetric")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("distance matrix entries must lie in [0,1]")


TRAIN, TEST = 0, 1


@dataclass
class DatasetGraph:
    """Transductive dataset-level graph: one node per image."""

    A: sp.csr_matrix  # binary adjacency, zero diagonal
    A_hat: sp.csr_matrix  # symmetric renormalization of A with self-loops
    X: np.ndarray  # node features, real[n][m]
    Y: np.ndarray  # class index per node, int
    split: np.ndarray  # TRAIN/TEST per node
    stats: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.X.shape[0]

    def compute_stats(self) -> dict:
        n = self.n_nodes
        edges = int(self.A.nnz) // 2
        density = edges / (n * (n - 1) / 2) if n > 1 else 0.0
        hist = np.bincount(self.Y).tolist()
        self.stats = {
            "n_nodes": n,
            "n_edges": edges,
            "density": density,
            "class_histogram": hist,
            "n_train": int(np.sum(self.split == TRAIN)),
            "n_test": int(np.sum(self.split == TEST)),
        }
        return self.stats


RELU, IDENTITY = "relu", "identity"


@dataclass
class GcnModel:
    """Two-layer (by default) graph convolution weights."""

    layer_dims: tuple[int, ...]  # [m, h, C]
    weights: list[np.ndarray]  # weights[l]: layer_dims[l] x layer_dims[l+1]
    activations: tuple[str, ...]  # per layer, RELU or IDENTITY

    def check(self) -> None:
        if len(self.weights) != len(self.layer_dims) - 1:
            raise ValueError("weight count does not match layer_dims")
        if len(self.activations) != len(self.weights):
            raise ValueError("activation count does not match weight count")
        for l, w in enumerate(self.weights):
            want = (self.layer_dims[l], self.layer_dims[l + 1])
            if w.shape != want:
                raise ValueError(f"layer {l} weight shape {w.shape}, expected {want}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"layer {l} weights contain non-finite entries")
