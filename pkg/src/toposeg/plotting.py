"""Static figures written next to the CSV/JSON reports."""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DIM_STYLE = {0: dict(color="tab:blue", marker="o", label="$H_0$"), 1: dict(color="tab:red", marker="^", label="$H_1$")}


def plot_diagram(diagram, path, title=None):
    """Birth/death scatter with the diagonal; essential classes drawn hollow."""
    fig, ax = plt.subplots(figsize=(4, 4))
    finite = [p.death for p in diagram if math.isfinite(p.death)] + [p.birth for p in diagram]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    pad = 0.05 * (hi - lo or 1.0)
    top = hi + pad
    ax.plot([lo - pad, top], [lo - pad, top], color="0.6", lw=1)
    for dim, style in DIM_STYLE.items():
        pts = diagram.in_dim(dim)
        if not pts:
            continue
        b = np.array([p.birth for p in pts])
        d = np.array([p.death if math.isfinite(p.death) else top for p in pts])
        ess = np.array([p.essential for p in pts])
        ax.scatter(b[~ess], d[~ess], s=14, **style)
        if ess.any():
            ax.scatter(b[ess], d[ess], s=40, facecolors="none", edgecolors=style["color"], marker=style["marker"])
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    ax.set_title(title or f"{diagram.filtration.value} persistence")
    ax.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_history(history, path):
    epochs = [r.epoch for r in history.records]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax1.plot(epochs, [r.bce for r in history.records], label="BCE")
    ax1.plot(epochs, [r.total for r in history.records], "--", label="total")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("training loss")
    ax1.legend(frameon=False)
    ax2.plot(epochs, [r.report.betti_error for r in history.records], color="tab:red", label="Betti error")
    ax2.plot(epochs, [r.report.dice for r in history.records], color="tab:green", label="Dice")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("validation")
    ax2.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_preprocess(original, processed, labeling, path):
    fig, axes = plt.subplots(1, 3, figsize=(9, 3.2))
    axes[0].imshow(original, cmap="gray", vmin=0, vmax=1)
    axes[0].set_title("input")
    axes[1].imshow(np.ma.masked_equal(labeling.labels, 0), cmap="tab20", interpolation="nearest")
    axes[1].set_title(f"{labeling.n_components} components")
    axes[2].imshow(processed, cmap="gray", vmin=0, vmax=1)
    axes[2].set_title("processed")
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
