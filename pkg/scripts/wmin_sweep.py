"""Noisy accuracy (n_s = 1.5, h_s = 1.8) for several width floors w_min."""

from _common import base, parse, run

args = parse(__doc__)
run(
    *base(args, "sweep"), "--axis", "w_min", "--values", "0.05,0.1,0.15,0.2,0.3",
    "--methods", "dune-magics", "--ns", "1.5", "--hs", "1.8",
    "--out", str(args.out_dir / "wmin.csv"), "--curves", str(args.out_dir / "wmin_curves.csv"),
)
