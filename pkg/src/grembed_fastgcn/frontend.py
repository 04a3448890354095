"""Assemble the three-level attributed region graph from a raster image."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig
from .descriptors import extract_descriptors
from .image_io import Image, load_and_resize
from .segment import RegionMap, segment
from .types import Arsrg, Descriptor, Region, validate_arsrg


def region_edges_of(rm: RegionMap) -> frozenset[tuple[int, int]]:
    """Pairs of region ids sharing a 4-connected pixel boundary."""
    lab = rm.labels
    pairs: set[tuple[int, int]] = set()
    for a, b in ((lab[:, :-1], lab[:, 1:]), (lab[:-1, :], lab[1:, :])):
        diff = a != b
        for i, j in zip(a[diff].tolist(), b[diff].tolist()):
            pairs.add((min(i, j), max(i, j)))
    return frozenset(pairs)


def assemble_arsrg(rm: RegionMap, descriptors: list[Descriptor], img: Image,
                   image_id: str, label: Optional[int]) -> Arsrg:
    lab = rm.labels
    n = rm.region_count
    flat = lab.ravel()
    counts = np.bincount(flat, minlength=n)
    ys, xs = np.mgrid[0 : rm.height, 0 : rm.width]
    cx = np.bincount(flat, weights=xs.ravel(), minlength=n) / counts
    cy = np.bincount(flat, weights=ys.ravel(), minlength=n) / counts
    mean = np.stack([
        np.bincount(flat, weights=img.pixels[..., c].ravel(), minlength=n) / counts
        for c in range(3)
    ], axis=1)

    assigned: list[list[int]] = [[] for _ in range(n)]
    for idx, d in enumerate(descriptors):
        x = min(max(int(round(d.position[0])), 0), rm.width - 1)
        y = min(max(int(round(d.position[1])), 0), rm.height - 1)
        assigned[int(lab[y, x])].append(idx)

    regions = tuple(
        Region(
            id=r,
            pixel_count=int(counts[r]),
            centroid=(float(cx[r]), float(cy[r])),
            mean_color=(float(mean[r, 0]), float(mean[r, 1]), float(mean[r, 2])),
            descriptor_ids=tuple(assigned[r]),
        )
        for r in range(n)
    )
    g = Arsrg(
        image_id=image_id, label=label, regions=regions,
        region_edges=region_edges_of(rm), descriptors=tuple(descriptors),
    )
    violations = validate_arsrg(g)
    if violations:
        raise ValueError(f"assembled Arsrg invalid: {violations[0]}")
    return g


def image_to_arsrg(path: str | Path, image_id: str, label: Optional[int],
                   cfg: RunConfig) -> Arsrg:
    """Whole frontend for one image: load, resize, segment, describe, assemble."""
    img = load_and_resize(path, cfg.image_size)
    rm = segment(img, cfg.quantization_threshold, cfg.merge_threshold)
    ds = extract_descriptors(img, cfg.descriptor_dim)
    return assemble_arsrg(rm, ds, img, image_id, label)
