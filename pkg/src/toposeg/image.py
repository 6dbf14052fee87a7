"""Grayscale image IO and elementwise helpers.

Images are 2D float64 numpy arrays indexed ``img[y, x]`` (row-major, origin
top-left). Pixel coordinates elsewhere in the package are ``(x, y)`` tuples.
Binary images are boolean arrays of the same layout.
"""

from pathlib import Path

import numpy as np
from PIL import Image


class ImageFormatError(ValueError):
    """Raised for unreadable, unsupported or multi-channel image files."""


def as_gray(img, normalized=True):
    """Validate and return ``img`` as a 2D float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a nonempty 2D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if normalized and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("normalized image values must lie in [0, 1]")
    return arr


def _read_pgm(path):
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: not a grayscale PGM (magic {magic!r})")
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    width, height, maxval = tokens
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: bad PGM maxval {maxval}")
    if magic == b"P2":
        lines = (line.split(b"#")[0] for line in data[pos:].splitlines())
        values = np.array(b" ".join(lines).split(), dtype=np.int64)
    else:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        values = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    if values.size != width * height:
        raise ImageFormatError(f"{path}: truncated PGM data")
    # PGM files store samples relative to maxval; rescale to the format maximum
    fmt_max = 65535 if maxval > 255 else 255
    values = values.astype(np.float64).reshape(height, width)
    return values * (fmt_max / maxval), fmt_max


def load_image(path):
    """Read an 8/16-bit grayscale PNG or PGM, scaled to [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    if path.suffix.lower() in (".pgm", ".pnm"):
        values, fmt_max = _read_pgm(path)
        return values / fmt_max
    try:
        with Image.open(path) as im:
            mode = im.mode
            arr = np.array(im)
    except OSError as exc:
        raise ImageFormatError(f"{path}: unreadable image ({exc})") from exc
    if mode == "L":
        fmt_max = 255
    elif mode in ("I;16", "I;16B", "I;16L", "I"):
        fmt_max = 65535
    elif mode == "1":
        fmt_max = 1
    else:
        raise ImageFormatError(f"{path}: not grayscale (mode {mode})")
    if arr.ndim != 2:
        raise ImageFormatError(f"{path}: not grayscale")
    return arr.astype(np.float64) / fmt_max


def to_uint8(img):
    img = as_gray(img)
    # round half up, not numpy's round-half-even
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path):
    """Write a normalized image as an 8-bit grayscale PNG."""
    Image.fromarray(to_uint8(img), mode="L").save(Path(path), format="PNG")


def save_labels(labels, path):
    """Write an integer label map as a 16-bit grayscale PNG."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 65535:
        raise ValueError("labels must fit in 16 bits")
    Image.fromarray(labels.astype(np.uint16)).save(Path(path), format="PNG")


def load_labels(path):
    with Image.open(path) as im:
        return np.array(im).astype(np.int64)


def binarize(img, threshold):
    """Boolean mask of pixels with value >= threshold."""
    return as_gray(img, normalized=False) >= threshold


def invert(img):
    return 1.0 - as_gray(img)
