import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from toposeg.image import ImageFormatError, binarize, invert, load_image, save_image


def write_pgm(path, arr, binary=True, maxval=255):
    h, w = arr.shape
    if binary:
        header = f"P5\n# test\n{w} {h}\n{maxval}\n".encode()
        dtype = ">u2" if maxval > 255 else "u1"
        path.write_bytes(header + arr.astype(dtype).tobytes())
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in arr)
        path.write_text(f"P2\n{w} {h}\n{maxval}\n{body}\n")


@pytest.mark.parametrize("binary", [True, False])
def test_pgm_extremes(tmp_path, binary):
    p = tmp_path / "a.pgm"
    write_pgm(p, np.full((3, 4), 255), binary)
    assert np.array_equal(load_image(p), np.ones((3, 4)))
    write_pgm(p, np.zeros((3, 4), dtype=int), binary)
    assert np.array_equal(load_image(p), np.zeros((3, 4)))


def test_pgm_scaling(tmp_path):
    p = tmp_path / "a.pgm"
    write_pgm(p, np.array([[128, 0]]))
    assert load_image(p)[0, 0] == pytest.approx(128 / 255)
    write_pgm(p, np.array([[65535, 0]]), maxval=65535)
    assert load_image(p)[0, 0] == 1.0


def test_png_16bit(tmp_path):
    p = tmp_path / "a.png"
    Image.fromarray(np.array([[0, 65535], [32768, 1]], dtype=np.uint16)).save(p)
    img = load_image(p)
    assert img[0, 1] == 1.0
    assert img[1, 0] == pytest.approx(32768 / 65535)


def test_rejects_color(tmp_path):
    p = tmp_path / "c.png"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(p)
    with pytest.raises(ImageFormatError, match="not grayscale"):
        load_image(p)
    q = tmp_path / "c.ppm"
    q.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ImageFormatError):
        load_image(q.rename(tmp_path / "c.pgm"))


def test_missing_and_garbage(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "nope.png")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(ImageFormatError):
        load_image(bad)


def test_save_rounding(tmp_path):
    p = tmp_path / "s.png"
    save_image(np.array([[1.0, 0.5, 0.0]]), p)
    assert np.array(Image.open(p)).tolist() == [[255, 128, 0]]


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (5, 7), elements=st.floats(0, 1)))
def test_roundtrip_within_quantization(tmp_path_factory, img):
    p = tmp_path_factory.mktemp("rt") / "x.png"
    save_image(img, p)
    assert np.max(np.abs(load_image(p) - img)) <= 1 / 255 + 1e-12


def test_binarize():
    assert binarize(np.full((2, 2), 0.7), 0.5).all()
    assert binarize(np.full((2, 2), 0.7), 0.7).all()
    assert binarize(np.array([[0.2, 0.8]]), 0.5).tolist() == [[False, True]]


@given(arrays(np.float64, (4, 4), elements=st.floats(0, 1)), st.floats(0, 1), st.floats(0, 1))
def test_binarize_monotone(img, t1, t2):
    lo, hi = sorted((t1, t2))
    assert not np.any(binarize(img, hi) & ~binarize(img, lo))


def test_invert():
    assert np.array_equal(invert(np.zeros((2, 2))), np.ones((2, 2)))
    assert invert(np.array([[0.3]]))[0, 0] == pytest.approx(0.7)


@given(arrays(np.float64, (3, 3), elements=st.floats(0, 1)))
def test_invert_reverses_order(img):
    inv = invert(img)
    assert np.allclose(invert(inv), img)
    a, b = img.ravel()[:2]
    if a < b:
        assert inv.ravel()[0] >= inv.ravel()[1]


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        invert(np.array([[np.nan]]))
