"""Raster input: PNG/PPM decoding and bilinear resizing to the working size."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


@dataclass(frozen=True)
class Image:
    pixels: np.ndarray  # H x W x 3, RGB in [0,1], float64

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def load_image(path: str | Path) -> Image:
    path = Path(path)
    try:
        if path.suffix.lower() in (".ppm", ".pnm"):
            arr = _load_ppm(path)
        else:
            with PILImage.open(path) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except FileNotFoundError:
        raise
    except (OSError, ValueError) as e:
        raise ValueError(f"cannot decode image {path}: {e}") from e
    if arr.size == 0:
        raise ValueError(f"cannot decode image {path}: empty raster")
    return Image(pixels=arr)


def _load_ppm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # binary PPM: "P6", whitespace/comment separated width height maxval, raster
    pos = 0
    fields = []
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM (missing P6)")
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PPM header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval <= 0 or maxval > 255:
        raise ValueError(f"unsupported PPM maxval {maxval}")
    raster = data[pos : pos + width * height * 3]
    if len(raster) != width * height * 3:
        raise ValueError("truncated PPM raster")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return arr.astype(np.float64) / float(maxval)


def save_png(img: Image, path: str | Path) -> None:
    arr = np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)
    PILImage.fromarray(arr, mode="RGB").save(str(path), format="PNG")


def resize_bilinear(img: Image, target: tuple[int, int]) -> Image:
    """Bilinear resample to target (width, height) with edge clamping.

    Source coordinates follow the half-pixel-center convention, so a 2x
    downscale samples exactly between pixel centers.
    """
    tw, th = target
    if tw <= 0 or th <= 0:
        raise ValueError(f"zero-dimension resize target {target}")
    h, w = img.pixels.shape[:2]
    if (w, h) == (tw, th):
        return Image(pixels=img.pixels.copy())
    sx = w / tw
    sy = h / th
    xs = (np.arange(tw) + 0.5) * sx - 0.5
    ys = (np.arange(th) + 0.5) * sy - 0.5
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(np.int64)
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    p = img.pixels
    top = p[y0][:, x0] * (1 - fx)[None, :, None] + p[y0][:, x1] * fx[None, :, None]
    bot = p[y1][:, x0] * (1 - fx)[None, :, None] + p[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return Image(pixels=np.clip(out, 0.0, 1.0))


def load_and_resize(path: str | Path, target: tuple[int, int] = (150, 150)) -> Image:
    return resize_bilinear(load_image(path), target)
