"""Command-line entry point: ``dunenet {train,sweep,eval,dump-samples}``.

Exit codes: 0 success, 1 data or runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import network, optim
from .data import (
    IdxError,
    NoiseSpec,
    PatternError,
    apply_pattern,
    load_idx,
    load_mnist,
    magics,
    magics_shift_for,
    mnist_paths,
    write_pgm,
)
from .intervals import IntervalParams, ModelFormatError, load_model, save_model
from .trainer import METHODS, RunConfig, Streams, TrainState, eval_params, fit, prepare_test_inputs

log = logging.getLogger("dunenet")

METRICS_HEADER = ["epoch", "train_loss", "clean_acc", "noisy_acc", "mean_width", "seconds"]
SWEEP_HEADER = ["method", "axis", "value", "hs", "final_noisy_acc"]
CURVE_HEADER = ["method", "axis", "value", "hs"] + METRICS_HEADER
AXES = ("n_s", "h_s", "w_min")


class UsageError(Exception):
    pass


@dataclass
class SweepSpec:
    axis: str
    values: list[float]
    base: RunConfig

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise UsageError(f"axis must be one of {AXES}")
        if not self.values:
            raise UsageError("sweep needs at least one value")
        for v in self.values:
            if not np.isfinite(v):
                raise UsageError(f"non-finite sweep value {v}")
            if self.axis in ("n_s", "w_min") and v < 0:
                raise UsageError(f"{self.axis} values must be >= 0, got {v}")
            if self.axis == "h_s" and not v > -0.5:
                raise UsageError(f"h_s values must exceed -0.5, got {v}")

    def point(self, method: str, value: float) -> RunConfig:
        cfg = replace(self.base, method=method)
        if self.axis == "n_s":
            return replace(cfg, noise=f"white:n_s={value!r}", h_s=magics_shift_for(value))
        if self.axis == "h_s":
            return replace(cfg, h_s=value)
        return replace(cfg, min_width=value)


def _fmt(x: float, digits: int) -> str:
    return f"{x:.{digits}f}"


def metrics_row(rec, timing: bool = True) -> list[str]:
    return [
        str(rec.epoch),
        _fmt(rec.train_loss, 6),
        _fmt(rec.clean_acc, 4),
        _fmt(rec.noisy_acc, 4),
        _fmt(rec.mean_width, 6),
        _fmt(rec.seconds if timing else 0.0, 2),
    ]


def _open_out(path):
    if path in (None, "-"):
        return _NoClose(sys.stdout)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")


class _NoClose:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()


def _noise_from_args(args) -> str:
    patterns = args.pattern or []
    if len(patterns) > 1:
        raise UsageError("train/eval accept at most one --pattern")
    if patterns:
        return str(NoiseSpec.parse(patterns[0]))
    return f"white:n_s={args.ns!r}"


def config_from_args(args) -> RunConfig:
    return RunConfig(
        layer_sizes=(784, *args.hidden, 10),
        method=args.method,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        prior_width=args.d,
        reg_strength=args.beta,
        min_width=args.wmin,
        h_s=args.hs,
        noise=_noise_from_args(args),
        seed=args.seed,
        eval_mode=args.eval_mode,
    )


def _load_data(args):
    train, test = load_mnist(args.mnist_dir)
    if args.limit_train:
        train = train.subset(args.limit_train)
    if args.limit_test:
        test = test.subset(args.limit_test)
    return train, test


def cmd_train(args) -> int:
    cfg = config_from_args(args)
    train, test = _load_data(args)
    state, records = fit(cfg, train, test)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for rec in records:
            w.writerow(metrics_row(rec, args.timing))
    if args.save_model:
        iv = state.intervals if state.intervals is not None else IntervalParams(state.theta, state.theta)
        save_model(args.save_model, iv, cfg.layer_sizes)
    return 0


def _run_point(job):
    cfg, train, test = job
    return fit(cfg, train, test)[1]


def cmd_sweep(args) -> int:
    methods = args.methods.split(",") if args.methods else list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --values {args.values!r}") from None
    spec = SweepSpec(args.axis, values, config_from_args(args))
    points = [(m, v, spec.point(m, v)) for m in methods for v in spec.values]
    train, test = _load_data(args)

    jobs = [(cfg, train, test) for _, _, cfg in points]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]

    # deterministic order: method as listed, then ascending value
    order = sorted(range(len(points)), key=lambda i: (methods.index(points[i][0]), points[i][1]))
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for i in order:
            method, value, cfg = points[i]
            w.writerow([method, spec.axis, f"{value:g}", f"{cfg.shift:g}", _fmt(results[i][-1].noisy_acc, 4)])
    if args.curves:
        with _open_out(args.curves) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVE_HEADER)
            for i in order:
                method, value, cfg = points[i]
                for rec in results[i]:
                    w.writerow([method, spec.axis, f"{value:g}", f"{cfg.shift:g}", *metrics_row(rec, args.timing)])
    return 0


def cmd_eval(args) -> int:
    if not args.load_model:
        raise UsageError("eval requires --load-model")
    iv, sizes = load_model(args.load_model)
    cfg = replace(config_from_args(args), layer_sizes=tuple(sizes))
    if cfg.topology.n_params != iv.n:
        raise ModelFormatError(f"{args.load_model}: {iv.n} parameters do not match topology {sizes}")
    images, labels = mnist_paths(args.mnist_dir, "test")
    test = load_idx(images, labels)
    if args.limit_test:
        test = test.subset(args.limit_test)
    opt = optim.make_optimizer("sgd", iv.n, cfg.learning_rate)
    streams = Streams.from_seed(cfg.seed)
    state = TrainState(opt, streams.sample, intervals=iv)
    theta = eval_params(state, cfg.eval_mode, streams.eval)
    clean = network.accuracy(cfg.topology, theta, magics(test.images, cfg.shift), test.labels)
    noisy = network.accuracy(cfg.topology, theta, prepare_test_inputs(test, cfg), test.labels)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["clean_acc", "noisy_acc", "hs", "noise"])
        w.writerow([_fmt(clean, 4), _fmt(noisy, 4), f"{cfg.shift:g}", cfg.noise])
    return 0


def cmd_dump_samples(args) -> int:
    specs = [NoiseSpec.parse(p) for p in args.pattern or []]
    images, labels = mnist_paths(args.mnist_dir, "test")
    test = load_idx(images, labels)
    if not 0 <= args.index < len(test):
        raise UsageError(f"--index must be in [0, {len(test)})")
    image = test.images[args.index]
    out = Path(args.out or "samples")
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(image, out / f"{args.index:05d}_00_original.pgm")
    for k, spec in enumerate(specs, start=1):
        # same per-image stream the noisy test set uses
        rng = np.random.default_rng([args.seed, args.index])
        write_pgm(apply_pattern(image, spec, rng), out / f"{args.index:05d}_{k:02d}_{spec.kind}.pgm")
    return 0


def _hidden(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad layer list {text!r}") from None
    if any(s <= 0 for s in sizes):
        raise argparse.ArgumentTypeError("layer sizes must be positive")
    return sizes


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mnist-dir", required=True, help="directory with the four MNIST IDX files")
    common.add_argument("--seed", type=_seed, default=42)
    common.add_argument("--out", help="output file (CSV) or directory (dump-samples); default stdout")
    common.add_argument("--pattern", action="append", help="corruption spec kind:key=value,... (repeatable)")
    common.add_argument("--ns", type=float, default=0.0, help="white-noise noise-to-signal ratio on test images")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--epochs", type=int, default=30)
    model.add_argument("--batch-size", type=int, default=100)
    model.add_argument("--lr", type=float, default=1e-3)
    model.add_argument("--optimizer", choices=optim.ALGORITHMS, default="adam")
    model.add_argument("--method", choices=METHODS, default="dune-magics")
    model.add_argument("--hidden", type=_hidden, default=[150], help="comma-separated hidden layer sizes")
    model.add_argument("--hs", type=float, default=None, help="Magics shift (default: 1.8 if n_s >= 1 else 2 n_s)")
    model.add_argument("--d", type=float, default=None, help="prior half-width (default: wmin / 2)")
    model.add_argument("--beta", type=float, default=0.1)
    model.add_argument("--wmin", type=float, default=0.15)
    model.add_argument("--eval-mode", choices=("sample", "midpoint"), default="sample")
    model.add_argument("--limit-train", type=int, default=0, help="use only the first N training images")
    model.add_argument("--limit-test", type=int, default=0, help="use only the first N test images")
    model.add_argument("--no-timing", dest="timing", action="store_false", help="write 0 in the seconds column")

    parser = argparse.ArgumentParser(prog="dunenet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common, model], help="train one model, write per-epoch metrics")
    p.add_argument("--save-model", help="write the trained intervals to this model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", parents=[common, model], help="final noisy accuracy along one hyperparameter axis")
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)} (default all)")
    p.add_argument("--curves", help="also write per-epoch rows for every point to this CSV")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", parents=[common, model], help="evaluate a saved model on the (noisy) test set")
    p.add_argument("--load-model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dump-samples", parents=[common], help="write one test image and its corruptions as PGM")
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(func=cmd_dump_samples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (UsageError, PatternError) as exc:
        parser.print_usage(sys.stderr)
        print(f"dunenet: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        if isinstance(exc, (IdxError, ModelFormatError)):
            print(f"dunenet: {exc}", file=sys.stderr)
            return 1
        # remaining ValueErrors come from config validation
        parser.print_usage(sys.stderr)
        print(f"dunenet: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dunenet: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
