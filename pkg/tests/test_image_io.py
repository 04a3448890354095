import numpy as np
import pytest

from grembed_fastgcn.image_io import (
    Image,
    load_and_resize,
    load_image,
    resize_bilinear,
    save_png,
)


def test_png_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    pixels = np.round(rng.random((12, 9, 3)) * 255) / 255.0
    path = tmp_path / "a.png"
    save_png(Image(pixels), path)
    back = load_image(path)
    assert np.allclose(back.pixels, pixels, atol=0.5 / 255.0)


def test_ppm_parser(tmp_path):
    path = tmp_path / "tiny.ppm"
    body = bytes([255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30])
    path.write_bytes(b"P6\n# comment line\n2 2\n255\n" + body)
    img = load_image(path)
    assert img.pixels.shape == (2, 2, 3)
    assert np.allclose(img.pixels[0, 0], [1.0, 0.0, 0.0])
    assert np.allclose(img.pixels[1, 1], [10 / 255, 20 / 255, 30 / 255])


def test_ppm_bad_magic(tmp_path):
    path = tmp_path / "bad.ppm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes(12))
    with pytest.raises(ValueError):
        load_image(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "nope.png")


def test_resize_constant_image_stays_constant():
    img = Image(np.full((7, 11, 3), 0.42))
    out = resize_bilinear(img, (150, 150))
    assert out.pixels.shape == (150, 150, 3)
    assert np.allclose(out.pixels, 0.42)


def test_resize_identity_is_exact():
    rng = np.random.default_rng(1)
    pixels = rng.random((20, 30, 3))
    out = resize_bilinear(Image(pixels), (30, 20))
    assert np.array_equal(out.pixels, pixels)


def test_resize_checkerboard_downsample_mean():
    # 2x2 average of an equal checkerboard is the midpoint of the values
    pixels = np.zeros((4, 4, 3))
    pixels[::2, 1::2] = 1.0
    pixels[1::2, ::2] = 1.0
    out = resize_bilinear(Image(pixels), (2, 2))
    assert np.allclose(out.pixels, 0.5)


def test_resize_range_preserved():
    rng = np.random.default_rng(2)
    pixels = rng.random((13, 17, 3))
    out = resize_bilinear(Image(pixels), (40, 31))
    assert out.pixels.min() >= pixels.min() - 1e-12
    assert out.pixels.max() <= pixels.max() + 1e-12


def test_load_and_resize_default_size(tmp_path):
    path = tmp_path / "b.png"
    save_png(Image(np.full((33, 44, 3), 0.5)), path)
    img = load_and_resize(path)
    assert img.pixels.shape == (150, 150, 3)
