"""Quantize-then-merge segmentation producing a region map.

Stand-in for a full texture-aware segmenter: uniform per-channel color
quantization, 4-connected component labeling, greedy merging of the most
similar adjacent pair while its normalized mean-color distance stays below
the merge threshold, and absorption of tiny regions. All ties are broken
lexicographically on region ids so the result is deterministic.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_io import Image

SQRT3 = math.sqrt(3.0)
MIN_REGION_FRACTION = 0.005  # regions below this share of pixels get absorbed


@dataclass(frozen=True)
class RegionMap:
    labels: np.ndarray  # H x W int region ids 0..R-1

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def region_count(self) -> int:
        return int(self.labels.max()) + 1


def quantization_bins(quantization_threshold: float) -> int:
    """Map the 0..600 threshold to a per-channel bin count (larger = coarser)."""
    return max(2, round(64 * (1.0 - quantization_threshold / 600.0)))


def _quantize(pixels: np.ndarray, bins: int) -> np.ndarray:
    idx = np.minimum((pixels * bins).astype(np.int64), bins - 1)
    return idx[..., 0] * bins * bins + idx[..., 1] * bins + idx[..., 2]


def _components(codes: np.ndarray) -> np.ndarray:
    """4-connected components of equal quantized code, ids by first occurrence."""
    out = np.full(codes.shape, -1, dtype=np.int64)
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    next_id = 0
    for code in np.unique(codes):
        mask = codes == code
        lab, n = ndimage.label(mask, structure=structure)
        out[mask] = lab[mask] + next_id - 1
        next_id += n
    return _relabel_by_scan(out)


def _relabel_by_scan(labels: np.ndarray) -> np.ndarray:
    flat = labels.ravel()
    first = np.full(flat.max() + 1, -1, dtype=np.int64)
    order = 0
    remap = np.empty_like(first)
    for v in flat:
        if first[v] < 0:
            first[v] = order
            order += 1
    remap[:] = first
    return remap[labels]


def _adjacency_pairs(labels: np.ndarray) -> set[tuple[int, int]]:
    pairs: set[tuple[int, int]] = set()
    a, b = labels[:, :-1], labels[:, 1:]
    diff = a != b
    for i, j in zip(a[diff].tolist(), b[diff].tolist()):
        pairs.add((min(i, j), max(i, j)))
    a, b = labels[:-1, :], labels[1:, :]
    diff = a != b
    for i, j in zip(a[diff].tolist(), b[diff].tolist()):
        pairs.add((min(i, j), max(i, j)))
    return pairs


class _Partition:
    """Mutable region partition over a fixed pixel grid."""

    def __init__(self, labels: np.ndarray, pixels: np.ndarray):
        self.parent = np.arange(int(labels.max()) + 1, dtype=np.int64)
        n = len(self.parent)
        self.count = np.bincount(labels.ravel(), minlength=n).astype(np.int64)
        self.color_sum = np.zeros((n, 3), dtype=np.float64)
        flat = labels.ravel()
        for c in range(3):
            self.color_sum[:, c] = np.bincount(
                flat, weights=pixels[..., c].ravel(), minlength=n
            )
        self.neighbors: list[set[int]] = [set() for _ in range(n)]
        for i, j in _adjacency_pairs(labels):
            self.neighbors[i].add(j)
            self.neighbors[j].add(i)
        self.alive = set(range(n))

    def mean(self, i: int) -> np.ndarray:
        return self.color_sum[i] / self.count[i]

    def distance(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.mean(i) - self.mean(j))) / SQRT3

    def merge(self, i: int, j: int) -> int:
        """Merge j into i (keep the smaller id as canonical)."""
        if j < i:
            i, j = j, i
        self.count[i] += self.count[j]
        self.color_sum[i] += self.color_sum[j]
        self.parent[j] = i
        self.alive.discard(j)
        for k in self.neighbors[j]:
            self.neighbors[k].discard(j)
            if k != i:
                self.neighbors[k].add(i)
                self.neighbors[i].add(k)
        self.neighbors[i].discard(i)
        self.neighbors[j] = set()
        return i

    def live_pairs(self):
        for i in sorted(self.alive):
            for j in sorted(self.neighbors[i]):
                if j > i:
                    yield i, j

    def resolve(self, labels: np.ndarray) -> np.ndarray:
        root = self.parent.copy()
        for v in range(len(root)):
            while root[root[v]] != root[v]:
                root[v] = root[root[v]]
        return _relabel_by_scan(root[labels])


def _merge_similar(part: _Partition, merge_threshold: float) -> bool:
    """Repeatedly merge the closest adjacent pair below the threshold.

    Lazy heap: entries are (distance, i, j, version_i, version_j); an entry is
    stale once either region was merged since it was pushed. Heap order equals
    the lexicographic (distance, min id, max id) tie-break rule.
    """
    changed = False
    version = [0] * len(part.parent)
    heap: list[tuple[float, int, int, int, int]] = []
    for i, j in part.live_pairs():
        d = part.distance(i, j)
        if d < merge_threshold:
            heap.append((d, i, j, 0, 0))
    heapq.heapify(heap)
    while heap:
        d, i, j, vi, vj = heapq.heappop(heap)
        if i not in part.alive or j not in part.alive:
            continue
        if version[i] != vi or version[j] != vj:
            continue
        c = part.merge(i, j)
        changed = True
        version[i] += 1
        version[j] += 1
        for k in sorted(part.neighbors[c]):
            dk = part.distance(c, k)
            if dk < merge_threshold:
                a, b = (c, k) if c < k else (k, c)
                heapq.heappush(heap, (dk, a, b, version[a], version[b]))
    return changed


def _absorb_small(part: _Partition, min_pixels: int) -> bool:
    changed = False
    while True:
        small = [i for i in sorted(part.alive)
                 if part.count[i] < min_pixels and part.neighbors[i]]
        if not small or len(part.alive) <= 1:
            return changed
        small.sort(key=lambda i: (part.count[i], i))
        i = small[0]
        j = min(part.neighbors[i], key=lambda k: (part.distance(i, k), k))
        part.merge(i, j)
        changed = True


def segment(img: Image, quantization_threshold: float, merge_threshold: float) -> RegionMap:
    if not (0.0 <= quantization_threshold <= 600.0):
        raise ValueError("quantization_threshold must lie in [0,600]")
    if not (0.0 <= merge_threshold <= 1.0):
        raise ValueError("merge_threshold must lie in [0,1]")
    bins = quantization_bins(quantization_threshold)
    labels = _components(_quantize(img.pixels, bins))
    part = _Partition(labels, img.pixels)
    min_pixels = max(1, int(math.ceil(MIN_REGION_FRACTION * labels.size)))
    # alternate until stable so both postconditions hold simultaneously:
    # no adjacent pair below the merge threshold, no region below min size
    while True:
        _merge_similar(part, merge_threshold)
        if not _absorb_small(part, min_pixels):
            break
    return RegionMap(labels=part.resolve(labels))
