"""Training loop for the tiny segmenter with BCE + lambda * topological loss."""

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from toposeg import model
from toposeg.image import load_image
from toposeg.loss import DEFAULT_LAMBDA, total_loss
from toposeg.metrics import ConfusionCounts, betti_error, confusion, ratio_metrics, MetricReport
from toposeg.image import binarize
from toposeg.persistence import Filtration

log = logging.getLogger(__name__)

HISTORY_COLUMNS = [
    "epoch", "bce", "topo", "total",
    "accuracy", "dice", "completeness", "correctness", "quality", "betti_error",
]
_PAIR_RE = re.compile(r"^(\d+)_(img|mask)\.png$")


@dataclass
class TrainConfig:
    patch: int = 64
    batch: int = 1
    epochs: int = 100
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    dims: tuple = (0, 1)
    filtration: Filtration = Filtration.SUPERLEVEL
    warmup_epochs: int = 0
    eval_patch: int = 32
    eval_n: int = 50
    eval_seed: int = 7
    bin_threshold: float = 0.5

    def __post_init__(self):
        if self.patch < 8:
            raise ValueError("patch must be at least 8 pixels")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.batch < 1 or self.epochs < 0:
            raise ValueError("batch must be >= 1 and epochs >= 0")
        self.filtration = Filtration(self.filtration)
        self.dims = tuple(sorted(set(self.dims)))


@dataclass
class EpochRecord:
    epoch: int
    bce: float
    topo: float
    total: float
    report: MetricReport


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    params: dict = field(default=None, repr=False)

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for r in self.records:
            rep = r.report
            values = [r.bce, r.topo, r.total, rep.accuracy, rep.dice, rep.completeness,
                      rep.correctness, rep.quality, rep.betti_error]
            writer.writerow([r.epoch] + [f"{v:.9g}" for v in values])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def list_pairs(data_dir):
    """Sorted ``(image, mask)`` path pairs following the NNN_img/NNN_mask naming."""
    data_dir = Path(data_dir)
    found = {}
    for p in data_dir.iterdir():
        m = _PAIR_RE.match(p.name)
        if m:
            found.setdefault(m.group(1), {})[m.group(2)] = p
    if not found:
        raise ValueError(f"{data_dir}: no NNN_img.png / NNN_mask.png pairs")
    unpaired = sorted(k for k, v in found.items() if len(v) != 2)
    if unpaired:
        raise ValueError(f"{data_dir}: unpaired files for ids {unpaired}")
    return [(found[k]["img"], found[k]["mask"]) for k in sorted(found)]


def split_pairs(pairs, train_fraction=0.8):
    if len(pairs) < 2:
        raise ValueError("need at least two image/mask pairs for a train/validation split")
    n_train = min(len(pairs) - 1, max(1, int(len(pairs) * train_fraction)))
    return pairs[:n_train], pairs[n_train:]


def sample_patch(img, mask, patch, rng):
    """Random ``patch`` x ``patch`` crop with independent 50% flips per axis."""
    h, w = img.shape
    if mask.shape != img.shape:
        raise ValueError("image and mask shapes differ")
    if patch > min(h, w):
        raise ValueError(f"patch {patch} does not fit in a {w}x{h} image")
    y = int(rng.integers(0, h - patch + 1))
    x = int(rng.integers(0, w - patch + 1))
    flip_h = rng.random() < 0.5
    flip_v = rng.random() < 0.5
    pi = img[y : y + patch, x : x + patch]
    pm = mask[y : y + patch, x : x + patch]
    if flip_h:
        pi, pm = pi[:, ::-1], pm[:, ::-1]
    if flip_v:
        pi, pm = pi[::-1, :], pm[::-1, :]
    return np.ascontiguousarray(pi), np.ascontiguousarray(pm)


def _load_pairs(pairs):
    out = []
    for ip, mp in pairs:
        img, mask = load_image(ip), load_image(mp)
        if img.shape != mask.shape:
            raise ValueError(f"{ip.name} and {mp.name} differ in size")
        out.append((img, (mask >= 0.5).astype(np.float64)))
    return out


def evaluate_model(params, data, cfg):
    """Validation report: pooled confusion ratios and mean per-image Betti error."""
    counts = ConfusionCounts(0, 0, 0, 0)
    berrs = []
    patch = min(cfg.eval_patch, *data[0][0].shape)
    for img, mask in data:
        f = model.forward(params, img)
        counts = counts + confusion(binarize(f, cfg.bin_threshold), mask >= 0.5)
        berrs.append(betti_error(f, mask, patch, cfg.eval_n, cfg.eval_seed, cfg.bin_threshold))
    values, undefined = ratio_metrics(counts)
    return MetricReport(**values, betti_error=float(np.mean(berrs)), betti_patch_size=patch,
                        betti_n_patches=cfg.eval_n, rng_seed=cfg.eval_seed,
                        bin_threshold=cfg.bin_threshold, undefined=undefined)


def train(data_dir, cfg=None):
    """Train on the first 80% of sorted pairs, validate on the rest, every epoch."""
    cfg = cfg or TrainConfig()
    train_pairs, val_pairs = split_pairs(list_pairs(data_dir))
    train_data = _load_pairs(train_pairs)
    val_data = _load_pairs(val_pairs)

    rng = np.random.default_rng(cfg.seed)
    params = model.init_params(rng)
    opt = model.Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    history = TrainHistory()
    for epoch in range(1, cfg.epochs + 1):
        lam = cfg.lam if epoch > cfg.warmup_epochs else 0.0
        sums = np.zeros(3)
        grads = None
        for i, (img, mask) in enumerate(train_data):
            pi, pm = sample_patch(img, mask, cfg.patch, rng)
            f, cache = model.forward(params, pi, cache=True)
            rep = total_loss(f, pm, lam, cfg.dims, cfg.filtration)
            sums += (rep.bce, rep.topo, rep.total)
            g = model.backward(params, pi, rep.grad_f, cache)
            grads = g if grads is None else {k: grads[k] + g[k] for k in g}
            if (i + 1) % cfg.batch == 0 or i == len(train_data) - 1:
                params = opt.step(params, grads)
                grads = None
        bce, topo, tot = sums / len(train_data)
        report = evaluate_model(params, val_data, cfg)
        history.records.append(EpochRecord(epoch, bce, topo, tot, report))
        log.info("epoch %d bce %.4f topo %.4f betti_error %.3f", epoch, bce, topo, report.betti_error)
    history.params = params
    return history
