"""Clean MNIST convergence of dune+Magics (150 hidden units, h_s = 0.5)."""

from _common import base, parse, run

args = parse(__doc__)
run(*base(args, "train"), "--hs", "0.5", "--out", str(args.out_dir / "clean_convergence.csv"))
