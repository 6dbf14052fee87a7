"""Command-line interface: ``toposeg <command> ...``.

Machine-readable output (JSON or CSV) goes to stdout, everything else to
stderr. Exit codes: 0 ok, 1 runtime failure, 2 usage error.
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from toposeg import loss as lossmod
from toposeg import model
from toposeg.image import ImageFormatError, binarize, load_image, save_image, save_labels
from toposeg.metrics import evaluate
from toposeg.persistence import Filtration, betti_curve, betti_numbers, compute_persistence, euler_characteristic
from toposeg.preprocess import PreprocessConfig, preprocess_pipeline
from toposeg.synth import synth_dataset
from toposeg.train import TrainConfig, train

log = logging.getLogger("toposeg")

GRADCHECK_TOL = 1e-4


def fmt(x):
    """9 significant digits, for every number printed."""
    if isinstance(x, float):
        return x if not math.isfinite(x) else float(f"{x:.9g}")
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    if isinstance(x, np.generic):
        return fmt(x.item())
    return x


def emit_json(obj):
    def default(o):
        return str(o)

    text = json.dumps(fmt(obj), default=default)
    # JSON has no infinity literal
    print(text.replace("Infinity", '"inf"'))


def dims_arg(text):
    try:
        dims = tuple(sorted({int(d) for d in text.split(",")}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; use e.g. 0,1") from None
    if not dims or not set(dims) <= {0, 1}:
        raise argparse.ArgumentTypeError("dims must be a subset of {0,1}")
    return dims


def odd_positive(text):
    k = int(text)
    if k < 1 or k % 2 == 0:
        raise argparse.ArgumentTypeError("must be a positive odd integer")
    return k


def nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def thresholds_arg(text):
    ts = [float(t) for t in text.split(",")]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise argparse.ArgumentTypeError("thresholds must be ascending")
    return ts


FILTRATIONS = [f.value for f in Filtration]


def cmd_persist(args):
    img = load_image(args.image)
    d = compute_persistence(img, args.filtration, args.cap)
    text = d.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.plot:
        from toposeg.plotting import plot_diagram

        plot_diagram(d, args.plot)
    log.info("%d points (%d dim-0, %d dim-1)", len(d), len(d.in_dim(0)), len(d.in_dim(1)))


def cmd_betti(args):
    img = load_image(args.image)
    if args.curve:
        print("threshold,beta0,beta1")
        for t, (b0, b1) in zip(args.curve, betti_curve(img, args.filtration, args.curve)):
            print(f"{t:.9g},{b0},{b1}")
        return
    mask = binarize(img, args.threshold)
    b0, b1 = betti_numbers(mask)
    emit_json({"beta0": b0, "beta1": b1, "euler": euler_characteristic(mask), "threshold": args.threshold})


def cmd_loss(args):
    f = load_image(args.f)
    g = (load_image(args.g) >= 0.5).astype(float)
    rep = lossmod.total_loss(f, g, args.lam, args.dims, args.filtration)
    emit_json(rep.summary())
    if args.grad_out:
        ys, xs = np.nonzero(rep.grad_f)
        lines = ["x,y,value"] + [f"{x},{y},{rep.grad_f[y, x]:.9g}" for x, y in zip(xs, ys)]
        Path(args.grad_out).write_text("\n".join(lines) + "\n")


def cmd_gradcheck(args):
    rng = np.random.default_rng(args.seed)
    if args.f:
        f, g = load_image(args.f), load_image(args.g)
    else:
        f = rng.random((args.size, args.size))
        g = (rng.random((args.size, args.size)) > 0.5).astype(float)
    checks = lossmod.finite_difference_check(f, g, args.dims, args.filtration, h=args.step)
    used = [c for c in checks if not c.skipped]
    worst = max((c.rel_error for c in used), default=0.0)
    emit_json({
        "max_rel_error": worst,
        "n_checked": len(used),
        "n_skipped": len(checks) - len(used),
        "tolerance": GRADCHECK_TOL,
        "pass": bool(used) and worst <= GRADCHECK_TOL,
    })
    if not used or worst > GRADCHECK_TOL:
        return 1


def cmd_preprocess(args):
    cfg = PreprocessConfig(args.smooth_k, args.border_d, args.filtration, args.invert, args.min_components)
    img = load_image(args.image)
    out, labeling = preprocess_pipeline(img, cfg)
    save_image(out, args.out)
    sidecar = labeling.sidecar()
    if args.labels_out:
        save_labels(labeling.labels, args.labels_out)
        Path(args.labels_out).with_suffix(".json").write_text(json.dumps(fmt(sidecar)).replace("Infinity", '"inf"'))
    if args.plot:
        from toposeg.plotting import plot_preprocess

        plot_preprocess(img, out, labeling, args.plot)
    emit_json(sidecar)


def cmd_metrics(args):
    pred, gt = load_image(args.pred), load_image(args.gt)
    patch = args.patch if args.patch is not None else min(64, *pred.shape)
    rep = evaluate(pred, gt, args.seed, patch, args.n, args.threshold)
    row = rep.as_dict()
    if args.csv:
        keys = ["accuracy", "dice", "completeness", "correctness", "quality", "betti_error"]
        if args.header:
            print(",".join(["name"] + keys))
        print(",".join([args.name] + [f"{row[k]:.9g}" for k in keys]))
    else:
        emit_json(row)


def cmd_train(args):
    cfg = TrainConfig(
        patch=args.patch, batch=args.batch, epochs=args.epochs, lr=args.lr, lam=args.lam, seed=args.seed,
        dims=args.dims, filtration=args.filtration, warmup_epochs=args.warmup,
        eval_patch=args.eval_patch, eval_n=args.eval_n, eval_seed=args.eval_seed,
    )
    history = train(args.data, cfg)
    text = history.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.checkpoint:
        model.save_checkpoint(history.params, args.checkpoint)
    if args.plot:
        from toposeg.plotting import plot_history

        plot_history(history, args.plot)


def cmd_synth(args):
    out, counts = synth_dataset(args.kind, args.n, args.size, args.seed, args.out)
    emit_json({"dir": str(out), "n": args.n, "size": args.size, "kind": args.kind, "objects": counts})


def build_parser():
    p = argparse.ArgumentParser(prog="toposeg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("persist", help="persistence diagram of an image as CSV")
    s.add_argument("image")
    s.add_argument("--filtration", choices=FILTRATIONS, default="sublevel")
    s.add_argument("--cap", type=float, default=None, help="replace the infinite death by this value")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--plot", help="also draw the diagram to this PNG")
    s.set_defaults(func=cmd_persist)

    s = sub.add_parser("betti", help="Betti numbers of a thresholded image")
    s.add_argument("image")
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--curve", type=thresholds_arg, help="comma-separated ascending thresholds; emits CSV")
    s.add_argument("--filtration", choices=FILTRATIONS, default="sublevel")
    s.set_defaults(func=cmd_betti)

    s = sub.add_parser("loss", help="BCE + lambda * topological loss")
    s.add_argument("--f", required=True, help="likelihood image")
    s.add_argument("--g", required=True, help="ground-truth mask")
    s.add_argument("--lambda", dest="lam", type=nonneg_float, default=lossmod.DEFAULT_LAMBDA)
    s.add_argument("--dims", type=dims_arg, default=(0, 1))
    s.add_argument("--filtration", choices=FILTRATIONS, default="superlevel")
    s.add_argument("--grad-out", help="CSV of nonzero gradient entries (x,y,value)")
    s.set_defaults(func=cmd_loss)

    s = sub.add_parser("gradcheck", help="finite-difference check of the topological gradient")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--size", type=positive_int, default=16)
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--step", type=float, default=1e-5)
    s.add_argument("--dims", type=dims_arg, default=(0, 1))
    s.add_argument("--filtration", choices=FILTRATIONS, default="superlevel")
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("preprocess", help="topological input-image processing")
    s.add_argument("image")
    s.add_argument("--out", required=True, help="processed 8-bit PNG")
    s.add_argument("--smooth-k", type=odd_positive, default=3)
    s.add_argument("--border-d", type=int, default=2)
    s.add_argument("--filtration", choices=FILTRATIONS, default="sublevel")
    s.add_argument("--invert", action="store_true")
    s.add_argument("--min-components", type=positive_int, default=1)
    s.add_argument("--labels-out", help="16-bit label PNG; a .json sidecar is written next to it")
    s.add_argument("--plot", help="before/after figure PNG")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("metrics", help="segmentation metrics and Betti error")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--patch", type=positive_int, default=None, help="default min(64, image side)")
    s.add_argument("--n", type=positive_int, default=100)
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--csv", action="store_true", help="emit one CSV row instead of JSON")
    s.add_argument("--header", action="store_true", help="with --csv, print the header row first")
    s.add_argument("--name", default="run")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("train", help="train the tiny segmenter")
    s.add_argument("--data", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--lambda", dest="lam", type=nonneg_float, default=lossmod.DEFAULT_LAMBDA)
    s.add_argument("--patch", type=int, default=64)
    s.add_argument("--batch", type=positive_int, default=1)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--dims", type=dims_arg, default=(0, 1))
    s.add_argument("--filtration", choices=FILTRATIONS, default="superlevel")
    s.add_argument("--warmup", type=int, default=0, help="BCE-only epochs before the topological term")
    s.add_argument("--eval-patch", type=positive_int, default=32)
    s.add_argument("--eval-n", type=positive_int, default=50)
    s.add_argument("--eval-seed", type=int, default=7)
    s.add_argument("--out", help="history CSV (default stdout)")
    s.add_argument("--checkpoint", help="write final weights here")
    s.add_argument("--plot", help="training curves PNG")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--kind", choices=["rings", "blobs"], required=True)
    s.add_argument("--n", type=positive_int, required=True)
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "size", 64) < 32 and args.command == "synth":
        parser.error("--size must be at least 32")
    if args.command == "gradcheck" and (args.f is None) != (args.g is None):
        parser.error("--f and --g go together")
    if args.command == "train" and args.patch < 8:
        parser.error("--patch must be at least 8")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args) or 0
    except (ValueError, OSError, ImageFormatError) as exc:
        print(f"toposeg {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
