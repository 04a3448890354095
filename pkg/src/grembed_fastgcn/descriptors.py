"""Local keypoint descriptors: difference-of-Gaussians detector over a
3-octave pyramid plus a 4x4x8 gradient-orientation-histogram descriptor
(clamped at 0.2 and renormalized). Fully deterministic; constants pinned.

`import_descriptors` parses externally computed descriptors as an escape
hatch for exact third-party extractors.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy import ndimage

from .image_io import Image
from .types import Descriptor

N_OCTAVES = 3
INTERVALS = 3  # extrema layers per octave
BASE_SIGMA = 1.6
CONTRAST_THRESHOLD = 0.03
EDGE_RATIO = 10.0
ORI_BINS = 36
ORI_SIGMA_FACTOR = 1.5
DESCR_WIDTH = 4  # spatial cells per side
DESCR_BINS = 8  # orientation bins per cell
DESCR_SCALE_FACTOR = 3.0  # cell side in units of keypoint scale
DESCR_CLAMP = 0.2
BORDER = 5

DEFAULT_DIM = DESCR_WIDTH * DESCR_WIDTH * DESCR_BINS  # 128


def _grayscale(img: Image) -> np.ndarray:
    p = img.pixels
    return 0.299 * p[..., 0] + 0.587 * p[..., 1] + 0.114 * p[..., 2]


def _gaussian_pyramid(gray: np.ndarray):
    k = 2.0 ** (1.0 / INTERVALS)
    n_layers = INTERVALS + 3
    octaves = []
    base = gray
    for _ in range(N_OCTAVES):
        if min(base.shape) < 2 * BORDER + 3:
            break
        layers = [ndimage.gaussian_filter(base, BASE_SIGMA * (k ** i), mode="nearest")
                  for i in range(n_layers)]
        octaves.append(np.stack(layers))
        base = layers[INTERVALS][::2, ::2]
    return octaves


def _is_extremum(dog: np.ndarray, layer: int, y: int, x: int) -> bool:
    v = dog[layer, y, x]
    cube = dog[layer - 1 : layer + 2, y - 1 : y + 2, x - 1 : x + 2]
    if v > 0:
        return v >= cube.max()
    return v <= cube.min()


def _passes_edge_test(d: np.ndarray, y: int, x: int) -> bool:
    dxx = d[y, x + 1] + d[y, x - 1] - 2 * d[y, x]
    dyy = d[y + 1, x] + d[y - 1, x] - 2 * d[y, x]
    dxy = 0.25 * (d[y + 1, x + 1] - d[y + 1, x - 1] - d[y - 1, x + 1] + d[y - 1, x - 1])
    tr = dxx + dyy
    det = dxx * dyy - dxy * dxy
    if det <= 0:
        return False
    r = EDGE_RATIO
    return tr * tr / det < (r + 1.0) ** 2 / r


def _gradients(layer_img: np.ndarray):
    gy, gx = np.gradient(layer_img)
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx) % (2.0 * math.pi)
    return mag, ang


def _dominant_orientation(mag, ang, y: int, x: int, sigma: float) -> float:
    radius = int(round(3.0 * ORI_SIGMA_FACTOR * sigma))
    h, w = mag.shape
    y0, y1 = max(0, y - radius), min(h, y + radius + 1)
    x0, x1 = max(0, x - radius), min(w, x + radius + 1)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    weight = np.exp(-((yy - y) ** 2 + (xx - x) ** 2)
                    / (2.0 * (ORI_SIGMA_FACTOR * sigma) ** 2))
    m = mag[y0:y1, x0:x1] * weight
    a = ang[y0:y1, x0:x1]
    bins = np.floor(a / (2.0 * math.pi) * ORI_BINS).astype(np.int64) % ORI_BINS
    hist = np.bincount(bins.ravel(), weights=m.ravel(), minlength=ORI_BINS)
    # circular smoothing stabilizes the peak against bin aliasing
    sm = (np.roll(hist, 1) + hist + np.roll(hist, -1)) / 3.0
    peak = int(np.argmax(sm))
    return (peak + 0.5) * 2.0 * math.pi / ORI_BINS


def _descriptor_vector(mag, ang, y: int, x: int, sigma: float, theta: float):
    cell = DESCR_SCALE_FACTOR * sigma
    radius = int(round(cell * (DESCR_WIDTH + 1) * math.sqrt(2) / 2.0))
    h, w = mag.shape
    y0, y1 = max(0, y - radius), min(h, y + radius + 1)
    x0, x1 = max(0, x - radius), min(w, x + radius + 1)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    dy = (yy - y).astype(np.float64)
    dx = (xx - x).astype(np.float64)
    ct, st = math.cos(theta), math.sin(theta)
    # rotate into the keypoint frame, in cell units, origin at descriptor center
    u = (ct * dx + st * dy) / cell + DESCR_WIDTH / 2.0 - 0.5
    v = (-st * dx + ct * dy) / cell + DESCR_WIDTH / 2.0 - 0.5
    inside = (u > -1.0) & (u < DESCR_WIDTH) & (v > -1.0) & (v < DESCR_WIDTH)
    if not inside.any():
        return None
    u, v = u[inside], v[inside]
    m = mag[y0:y1, x0:x1][inside]
    rel = (ang[y0:y1, x0:x1][inside] - theta) % (2.0 * math.pi)
    o = rel / (2.0 * math.pi) * DESCR_BINS
    gauss = np.exp(-((u - DESCR_WIDTH / 2.0 + 0.5) ** 2
                     + (v - DESCR_WIDTH / 2.0 + 0.5) ** 2)
                   / (0.5 * DESCR_WIDTH ** 2))
    m = m * gauss
    hist = np.zeros((DESCR_WIDTH + 2, DESCR_WIDTH + 2, DESCR_BINS), dtype=np.float64)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    o0 = np.floor(o).astype(np.int64)
    fu, fv, fo = u - u0, v - v0, o - o0
    for du in (0, 1):
        wu = np.where(du == 0, 1.0 - fu, fu)
        for dv in (0, 1):
            wv = np.where(dv == 0, 1.0 - fv, fv)
            for do in (0, 1):
                wo = np.where(do == 0, 1.0 - fo, fo)
                np.add.at(
                    hist,
                    (v0 + dv + 1, u0 + du + 1, (o0 + do) % DESCR_BINS),
                    m * wu * wv * wo,
                )
    vec = hist[1 : DESCR_WIDTH + 1, 1 : DESCR_WIDTH + 1, :].ravel()
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return None
    vec = np.minimum(vec / norm, DESCR_CLAMP)
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return None
    return vec / norm


def extract_descriptors(img: Image, dim: int = DEFAULT_DIM) -> list[Descriptor]:
    if dim != DEFAULT_DIM:
        raise ValueError(f"descriptor dim must be {DEFAULT_DIM} for the 4x4x8 layout")
    gray = _grayscale(img)
    octaves = _gaussian_pyramid(gray)
    k = 2.0 ** (1.0 / INTERVALS)
    out: list[Descriptor] = []
    for oct_idx, gauss in enumerate(octaves):
        dog = gauss[1:] - gauss[:-1]
        scale_mult = 2.0 ** oct_idx
        h, w = dog.shape[1:]
        grads = {}
        strong = np.abs(dog) > CONTRAST_THRESHOLD
        for layer in range(1, INTERVALS + 1):
            ys, xs = np.nonzero(strong[layer])
            for y, x in zip(ys.tolist(), xs.tolist()):
                if not (BORDER <= y < h - BORDER and BORDER <= x < w - BORDER):
                    continue
                if not _is_extremum(dog, layer, y, x):
                    continue
                if not _passes_edge_test(dog[layer], y, x):
                    continue
                sigma = BASE_SIGMA * (k ** layer)
                if layer not in grads:
                    grads[layer] = _gradients(gauss[layer])
                mag, ang = grads[layer]
                theta = _dominant_orientation(mag, ang, y, x, sigma)
                vec = _descriptor_vector(mag, ang, y, x, sigma, theta)
                if vec is None:
                    continue
                px, py = x * scale_mult, y * scale_mult
                if not (0 <= px < img.width and 0 <= py < img.height):
                    continue
                out.append(Descriptor(
                    vector=vec, position=(float(px), float(py)),
                    scale=sigma * scale_mult, orientation=theta,
                ))
    out.sort(key=lambda d: (d.scale, d.position[1], d.position[0], d.orientation))
    return out


def import_descriptors(path: str | Path, dim: int = DEFAULT_DIM) -> list[Descriptor]:
    """Parse the documented text format: x y scale orientation d_1..d_D per line."""
    out: list[Descriptor] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4 + dim:
            raise ValueError(
                f"{path}:{lineno}: expected {4 + dim} columns, found {len(parts)}"
            )
        values = np.array([float(v) for v in parts], dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{path}:{lineno}: non-finite value")
        out.append(Descriptor(
            vector=values[4:], position=(values[0], values[1]),
            scale=values[2], orientation=values[3],
        ))
    return out
