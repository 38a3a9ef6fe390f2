"""Per-epoch noisy accuracy of the three methods at n_s = 1.5."""

from _common import base, parse, run

args = parse(__doc__)
run(
    *base(args, "sweep"), "--axis", "n_s", "--values", "1.5",
    "--out", str(args.out_dir / "epochwise_final.csv"), "--curves", str(args.out_dir / "epochwise_curves.csv"),
)
