"""Pixel-wise segmentation metrics and the patch-sampled Betti number error."""

from dataclasses import asdict, dataclass, field

import numpy as np

from toposeg.image import binarize
from toposeg.persistence import betti_numbers

RATIO_NAMES = ("accuracy", "dice", "completeness", "correctness", "quality")
BETTI_AGGREGATION = "abs_beta0+abs_beta1"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


def confusion(pred, gt):
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return ConfusionCounts(tp, fp, fn, pred.size - tp - fp - fn)


def _ratio(num, den):
    # 0/0 means both masks agree on emptiness: count it as perfect
    return (1.0, True) if den == 0 else (num / den, False)


def ratio_metrics(c):
    """Return ``(metrics, undefined)``: the five ratios as a dict, and the
    names of those that were 0/0 and set to 1."""
    tp, fp, fn, tn = c.tp, c.fp, c.fn, c.tn
    raw = {
        "accuracy": _ratio(tp + tn, tp + tn + fp + fn),
        "dice": _ratio(2 * tp, 2 * tp + fp + fn),
        "completeness": _ratio(tp, tp + fn),
        "correctness": _ratio(tp, tp + fp),
        "quality": _ratio(tp, tp + fp + fn),
    }
    values = {k: v for k, (v, _) in raw.items()}
    undefined = [k for k, (_, flag) in raw.items() if flag]
    return values, undefined


def sample_corners(shape, patch, n, seed):
    h, w = shape
    if patch > min(h, w):
        raise ValueError(f"patch {patch} larger than image {shape}")
    if n < 1:
        raise ValueError("need at least one patch")
    rng = np.random.default_rng(seed)
    ys = rng.integers(0, h - patch + 1, size=n)
    xs = rng.integers(0, w - patch + 1, size=n)
    return list(zip(xs.tolist(), ys.tolist()))


def betti_error(pred, gt, patch=64, n=100, seed=None, bin_threshold=0.5):
    """Mean of |d beta0| + |d beta1| over ``n`` random patches shared by both images."""
    if seed is None:
        raise ValueError("betti_error needs an explicit seed")
    pred_b = binarize(pred, bin_threshold)
    gt_b = binarize(gt, bin_threshold)
    if pred_b.shape != gt_b.shape:
        raise ValueError(f"shape mismatch: {pred_b.shape} vs {gt_b.shape}")
    total = 0
    for x, y in sample_corners(pred_b.shape, patch, n, seed):
        bp = betti_numbers(pred_b[y : y + patch, x : x + patch])
        bg = betti_numbers(gt_b[y : y + patch, x : x + patch])
        total += abs(bp[0] - bg[0]) + abs(bp[1] - bg[1])
    return total / n


@dataclass
class MetricReport:
    accuracy: float
    dice: float
    completeness: float
    correctness: float
    quality: float
    betti_error: float
    betti_patch_size: int
    betti_n_patches: int
    rng_seed: int
    bin_threshold: float = 0.5
    betti_aggregation: str = BETTI_AGGREGATION
    undefined: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def evaluate(pred, gt, seed, patch=64, n=100, bin_threshold=0.5):
    """Full report for one prediction / ground-truth pair."""
    pred_b = binarize(pred, bin_threshold)
    gt_b = binarize(gt, bin_threshold)
    values, undefined = ratio_metrics(confusion(pred_b, gt_b))
    berr = betti_error(pred, gt, patch, n, seed, bin_threshold)
    return MetricReport(**values, betti_error=berr, betti_patch_size=patch, betti_n_patches=n,
                        rng_seed=seed, bin_threshold=bin_threshold, undefined=undefined)
