"""Shared flags for the experiment scripts. Each script is a thin wrapper that
issues ``dunenet`` commands and leaves plot-ready CSV in ``--out-dir``."""

import argparse
import sys
from pathlib import Path

from dunenet.cli import main as dunenet


def parse(doc: str) -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=doc)
    ap.add_argument("--mnist-dir", default="data/mnist")
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--seed", default="42")
    ap.add_argument("--jobs", default="1", help="parallel sweep points")
    ap.add_argument("--epochs", default="30")
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    return args


def run(*argv: str) -> None:
    print("dunenet", " ".join(argv), flush=True)
    code = dunenet(list(argv))
    if code:
        sys.exit(code)


def base(args, command: str) -> list[str]:
    flags = [command, "--mnist-dir", args.mnist_dir, "--seed", args.seed, "--epochs", args.epochs]
    if command == "sweep":
        flags += ["--jobs", args.jobs]
    return flags
