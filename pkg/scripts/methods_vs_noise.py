"""Final noisy accuracy against n_s for dune+Magics, plain+Magics and plain.

h_s follows the sweep rule: 1.8 for n_s >= 1, otherwise 2 n_s.
"""

from _common import base, parse, run

args = parse(__doc__)
run(
    *base(args, "sweep"), "--axis", "n_s", "--values", "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.5",
    "--out", str(args.out_dir / "methods_vs_noise.csv"),
)
