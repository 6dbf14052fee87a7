"""Synthetic image/mask datasets for desk-scale experiments.

``rings``: bright annuli on a dark background. Each ring has a dim arc, the
kind of thin weak connection a pixel-wise loss tends to break.
``blobs``: dark disks on a light background with salt noise.
"""

from pathlib import Path

import numpy as np

from toposeg.image import save_image

RING_NOISE = 0.05
SALT_FRACTION = 0.01


def _place(rng, size, radii, margin, gap, tries=500):
    centers = []
    for r in radii:
        for _ in range(tries):
            c = rng.uniform(margin + r, size - 1 - margin - r, size=2)
            if all(np.hypot(*(c - c2)) > r + r2 + gap for c2, r2 in centers):
                centers.append((c, r))
                break
        else:
            return None
    return centers


def _dist(size, center):
    yy, xx = np.mgrid[0:size, 0:size]
    return np.hypot(yy - center[0], xx - center[1]), np.arctan2(yy - center[0], xx - center[1])


def make_rings(rng, size=64):
    """One rings image; returns ``(image, mask, n_rings)``."""
    if size < 32:
        raise ValueError("synthetic images need size >= 32")
    while True:
        m = int(rng.integers(1, 5))
        radii = rng.integers(5, max(6, min(12, size // 5)) + 1, size=m).astype(float)
        placed = _place(rng, size, radii, margin=3, gap=3)
        if placed is not None:
            break
    img = np.full((size, size), 0.15)
    mask = np.zeros((size, size), dtype=bool)
    for center, r_out in placed:
        width = float(rng.integers(2, 4))
        d, theta = _dist(size, center)
        ring = (d >= r_out - width) & (d <= r_out)
        level = rng.uniform(0.45, 0.75)
        # a dim arc of about 60 degrees
        start = rng.uniform(-np.pi, np.pi)
        arc = np.angle(np.exp(1j * (theta - start))) % (2 * np.pi) < np.pi / 3
        img[ring] = 0.15 + np.where(arc[ring], 0.3 * level, level)
        mask |= ring
    img = img + rng.normal(0.0, RING_NOISE, size=img.shape)
    return np.clip(img, 0.0, 1.0), mask.astype(np.float64), len(placed)


def make_blobs(rng, size=64, k=None):
    """One blobs image; returns ``(image, mask, n_disks)``."""
    if size < 32:
        raise ValueError("synthetic images need size >= 32")
    while True:
        n = int(rng.integers(2, 7)) if k is None else int(k)
        radii = rng.integers(4, 8, size=n).astype(float)
        # a gap wider than the 3x3 smoothing footprint keeps disks separate basins
        placed = _place(rng, size, radii, margin=5, gap=5)
        if placed is not None:
            break
    img = np.full((size, size), 0.85)
    mask = np.zeros((size, size), dtype=bool)
    for center, r in placed:
        d, _ = _dist(size, center)
        disk = d <= r
        img[disk] = rng.uniform(0.05, 0.25)
        mask |= disk
    salt = rng.random(img.shape) < SALT_FRACTION
    img[salt] = 1.0
    return img, mask.astype(np.float64), len(placed)


def synth_dataset(kind, n, size, seed, out_dir):
    """Write ``n`` pairs ``NNN_img.png`` / ``NNN_mask.png`` into ``out_dir``."""
    makers = {"rings": make_rings, "blobs": make_blobs}
    if kind not in makers:
        raise ValueError(f"unknown dataset kind {kind!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    counts = []
    for i in range(n):
        img, mask, count = makers[kind](rng, size)
        save_image(img, out / f"{i:03d}_img.png")
        save_image(mask, out / f"{i:03d}_mask.png")
        counts.append(count)
    return out, counts
