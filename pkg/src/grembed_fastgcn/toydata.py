"""Procedural desk-scale dataset: 60 images, 3 classes of colored blobs
carrying class-specific texture stamps on a controlled background.

Each class owns a fixed set of small, mutually distinct noise stamps. Every
image of a class repeats a subset of these stamps at jittered integer
positions, so corresponding keypoints match unambiguously within a class
(each stamp is unique inside an image, which keeps the ratio test happy)
while different classes share no stamps at all. Deterministic per seed.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .image_io import Image, save_png
from .manifest import Entry, Manifest, write_manifest

SIZE = 150
PER_CLASS = 20
CLASS_NAMES = ("ruby", "moss", "cobalt")
CLASS_COLORS = (
    (0.85, 0.25, 0.20),
    (0.20, 0.75, 0.30),
    (0.25, 0.35, 0.85),
)
BACKGROUND = (0.92, 0.91, 0.88)
N_STAMPS = 5
STAMP_SIZE = 21


def _class_stamps(class_idx: int) -> list[np.ndarray]:
    """Fixed per-class library of distinct patches in [0,1].

    Each stamp mixes smooth noise with a stamp-specific linear ramp; the ramp
    dominates the local gradient field, which keeps the detected keypoint
    orientation stable across occurrences of the same stamp.
    """
    rng = np.random.Generator(np.random.PCG64(9000 + class_idx))
    yy, xx = np.mgrid[0:STAMP_SIZE, 0:STAMP_SIZE].astype(np.float64)
    c = (STAMP_SIZE - 1) / 2.0
    stamps = []
    for k in range(N_STAMPS):
        theta = 2.0 * np.pi * (k + 0.35 * class_idx) / N_STAMPS
        ct, st = np.cos(theta), np.sin(theta)
        field = np.zeros((STAMP_SIZE, STAMP_SIZE))
        # central elongated bump pins both the DoG extremum and its orientation
        offsets = [(0.0, 0.0)] + [
            (float(rng.uniform(-6.5, 6.5)), float(rng.uniform(-6.5, 6.5)))
            for _ in range(2)
        ]
        amps = [1.0, float(rng.uniform(0.55, 0.9)) * (-1) ** k,
                float(rng.uniform(0.55, 0.9))]
        for (ox, oy), amp in zip(offsets, amps):
            dx = xx - (c + ox)
            dy = yy - (c + oy)
            u = ct * dx + st * dy
            v = -st * dx + ct * dy
            field += amp * np.exp(-(u * u / (2 * 2.8 ** 2) + v * v / (2 * 1.6 ** 2)))
        stamps.append((field - field.min()) / (field.max() - field.min()))
    return stamps


# anchors (dx, dy) around the blob center, spaced so descriptor windows at
# the detected scales never reach a neighboring stamp
_ANCHORS = [(0, 0), (-30, -30), (30, -30), (-30, 30), (30, 30)]


def _paint_disk(img: np.ndarray, cx: float, cy: float, r: float, color) -> None:
    y, x = np.ogrid[0:SIZE, 0:SIZE]
    mask = (x - cx) ** 2 + (y - cy) ** 2 <= r * r
    img[mask] = color


def _render(class_idx: int, stamps: list[np.ndarray], rng: np.random.Generator) -> Image:
    img = np.empty((SIZE, SIZE, 3), dtype=np.float64)
    img[:] = BACKGROUND
    base = np.array(CLASS_COLORS[class_idx])
    tint = np.clip(base + rng.uniform(-0.03, 0.03, size=3), 0.0, 1.0)
    # stamps span dark-to-near-white so the blob detector fires for any hue
    dark = np.clip(tint * 0.25, 0.0, 1.0)
    bright = np.clip(tint + 0.6 * (1.0 - tint), 0.0, 1.0)
    bx = int(rng.integers(73, 78))
    by = int(rng.integers(73, 78))
    _paint_disk(img, bx, by, 58.0, tint)
    # every stamp appears once, shuffled over the anchors
    chosen = np.arange(N_STAMPS)
    order = rng.permutation(len(_ANCHORS))
    half = STAMP_SIZE // 2
    for slot, stamp_idx in zip(order.tolist(), chosen.tolist()):
        dx, dy = _ANCHORS[slot]
        jx = int(rng.integers(-3, 4))
        jy = int(rng.integers(-3, 4))
        x0 = bx + dx + jx - half
        y0 = by + dy + jy - half
        field = stamps[stamp_idx][..., None]
        patch = dark[None, None, :] + field * (bright - dark)[None, None, :]
        img[y0 : y0 + STAMP_SIZE, x0 : x0 + STAMP_SIZE] = patch
    return Image(pixels=np.clip(img, 0.0, 1.0))


def generate_toy_dataset(out_dir: str | Path, seed: int = 7) -> Manifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    entries = []
    for class_idx, class_name in enumerate(CLASS_NAMES):
        stamps = _class_stamps(class_idx)
        for k in range(PER_CLASS):
            img = _render(class_idx, stamps, rng)
            name = f"{class_name}_{k:02d}.png"
            save_png(img, out_dir / name)
            split = "train" if k < PER_CLASS // 2 else "test"
            entries.append(Entry(path=str(out_dir / name), class_name=class_name,
                                 split=split))
    manifest = Manifest(name="toy", entries=tuple(entries))
    manifest.check()
    write_manifest(manifest, out_dir / "manifest.tsv")
    return manifest
