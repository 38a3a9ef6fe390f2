"""Noisy accuracy at n_s = 1.5 for several Magics shifts h_s."""

from _common import base, parse, run

args = parse(__doc__)
run(
    *base(args, "sweep"), "--axis", "h_s", "--values", "0,0.5,1,1.5,1.8,2.5",
    "--methods", "dune-magics", "--ns", "1.5",
    "--out", str(args.out_dir / "hs.csv"), "--curves", str(args.out_dir / "hs_curves.csv"),
)
