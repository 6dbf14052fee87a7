"""Topological preprocessing of input images.

smooth -> border modification -> sublevel persistence -> lifetime-gap
threshold -> marking of significant components -> background interpolation.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage
from scipy.spatial import cKDTree

from toposeg.image import as_gray
from toposeg.persistence import Filtration, compute_persistence

_FOUR = ndimage.generate_binary_structure(2, 1)
INTERP_NEIGHBORS = 8


@dataclass(frozen=True)
class PreprocessConfig:
    """Pipeline parameters.

    ``filtration=SUPERLEVEL`` treats bright structures as the objects: the
    pipeline runs on the inverted image and inverts the result back.
    ``invert_input`` inverts the input and keeps the output inverted.
    """

    smooth_k: int = 3
    border_d: int = 2
    filtration: Filtration = Filtration.SUBLEVEL
    invert_input: bool = False
    min_components: int = 1

    def __post_init__(self):
        if self.smooth_k < 1 or self.smooth_k % 2 == 0:
            raise ValueError(f"smooth_k must be a positive odd integer, got {self.smooth_k}")
        if self.border_d < 0:
            raise ValueError("border_d must be nonnegative")
        if self.min_components < 1:
            raise ValueError("min_components must be positive")
        object.__setattr__(self, "filtration", Filtration(self.filtration))


@dataclass
class ComponentLabeling:
    labels: np.ndarray = field(repr=False)
    n_components: int
    threshold: float
    n_significant: int = 0
    dropped: list = field(default_factory=list)
    levels: list = field(default_factory=list)  # flood level of label k at index k - 1

    @property
    def shape(self):
        return self.labels.shape

    def sidecar(self):
        return {
            "threshold": self.threshold,
            "n_significant": self.n_significant,
            "n_components": self.n_components,
            "dropped_points": [
                {"birth": p.birth, "death": p.death, "birth_pixel": list(p.birth_pixel)} for p in self.dropped
            ],
        }


def smooth(img, k):
    """k x k box mean with mirror padding (edge sample repeated)."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"window size must be odd and positive, got {k}")
    img = as_gray(img, normalized=False)
    if k == 1:
        return img.copy()
    r = k // 2
    padded = np.pad(img, r, mode="symmetric")
    # each window is reduced independently, so equal windows give equal means
    return sliding_window_view(padded, (k, k)).mean(axis=(-2, -1))


def modify_border(img, d):
    """Set every pixel closer than ``d`` to the image edge to the image minimum."""
    img = as_gray(img, normalized=False)
    h, w = img.shape
    if d < 0:
        raise ValueError("border distance must be nonnegative")
    if 2 * d >= min(h, w):
        raise ValueError(f"border distance {d} leaves no interior in a {w}x{h} image")
    out = img.copy()
    if d > 0:
        lo = img.min()
        out[:d, :] = lo
        out[-d:, :] = lo
        out[:, :d] = lo
        out[:, -d:] = lo
    return out


def select_threshold_lifetimes(lifetimes, min_components=1):
    """Midpoint of the widest gap between consecutive sorted lifetimes.

    Returns ``(threshold, n_significant)``; a zero sentinel closes the list.
    """
    ls = sorted((float(v) for v in lifetimes), reverse=True)
    if not ls:
        raise ValueError("no finite lifetimes to threshold")
    ls.append(0.0)
    start = min(min_components, len(ls) - 1)
    best = start
    for i in range(start, len(ls)):
        if ls[i - 1] - ls[i] > ls[best - 1] - ls[best]:
            best = i
    return 0.5 * (ls[best - 1] + ls[best]), best


def select_threshold(diagram, dim=0, min_components=1):
    """Lifetime threshold separating significant ``dim`` classes from noise.

    Essential classes are not candidates.
    """
    return select_threshold_lifetimes([p.lifetime for p in diagram.finite(dim)], min_components)


def mark_components(img, diagram, threshold):
    """Label the component of every dim-0 class living longer than ``threshold``.

    Classes are handled by decreasing death. A class's component is flooded
    (4-connected) from its birth pixel through unlabeled pixels whose value is
    below its death. The essential class uses the last finite merge level of
    the diagram as its death, or the whole image when there is none. A class
    whose birth pixel is already labeled is dropped.
    """
    img = as_gray(img, normalized=False)
    if diagram.filtration is not Filtration.SUBLEVEL:
        raise ValueError("component marking needs a sublevel diagram")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    points = diagram.in_dim(0)
    finite_deaths = [p.death for p in points if not p.essential]
    top = max(finite_deaths) if finite_deaths else math.inf
    entries = [(top, p) for p in points if p.essential]
    entries += [(p.death, p) for p in points if not p.essential and p.lifetime > threshold]
    entries.sort(key=lambda e: (-e[0], not e[1].essential, e[1].birth, e[1].birth_pixel[1], e[1].birth_pixel[0]))

    labels = np.zeros(img.shape, dtype=np.int64)
    dropped = []
    levels = []
    n = 0
    for level, p in entries:
        x, y = p.birth_pixel
        if labels[y, x] != 0:
            dropped.append(p)
            continue
        free = labels == 0
        if math.isfinite(level):
            free &= img < level
        comp, _ = ndimage.label(free, structure=_FOUR)
        n += 1
        labels[comp == comp[y, x]] = n
        levels.append(level)
    n_sig = sum(1 for p in points if not p.essential and p.lifetime > threshold)
    return ComponentLabeling(labels, n, float(threshold), n_sig, dropped, levels)


def interpolate_background(img, labeling, k=INTERP_NEIGHBORS):
    """Fill unlabeled pixels by inverse-distance-squared weighting of the
    ``k`` nearest labeled pixels; labeled pixels are left untouched."""
    img = as_gray(img, normalized=False)
    labeled = labeling.labels > 0
    out = img.copy()
    if labeled.all() or not labeled.any():
        return out
    src = np.argwhere(labeled)
    dst = np.argwhere(~labeled)
    k = min(k, len(src))
    dist, idx = cKDTree(src).query(dst, k=list(range(1, k + 1)))
    weights = 1.0 / dist**2
    vals = img[src[:, 0], src[:, 1]][idx]
    out[dst[:, 0], dst[:, 1]] = (weights * vals).sum(axis=1) / weights.sum(axis=1)
    return out


def preprocess_pipeline(img, cfg=PreprocessConfig()):
    """Run the full preprocessing chain; returns ``(processed, labeling)``."""
    img = as_gray(img)
    work = 1.0 - img if cfg.invert_input else img
    flip_back = cfg.filtration is Filtration.SUPERLEVEL
    if flip_back:
        work = 1.0 - work
    work = modify_border(smooth(work, cfg.smooth_k), cfg.border_d)
    diagram = compute_persistence(work, Filtration.SUBLEVEL, essential_cap=1.0, dims=(0,))
    if diagram.finite(0):
        threshold, _ = select_threshold(diagram, 0, cfg.min_components)
    else:
        threshold = math.inf
    labeling = mark_components(work, diagram, threshold)
    out = interpolate_background(work, labeling)
    if flip_back:
        out = 1.0 - out
    return np.clip(out, 0.0, 1.0), labeling
