"""Background-pattern suite: sample PGMs plus accuracy of one model per pattern.

Trains a single dune+Magics model (h_s = 1.8) and evaluates it on the test set
corrupted by each pattern in turn.
"""

import csv

from _common import base, parse, run

PATTERNS = [
    "white:n_s=1.5",
    "salt-pepper:density=0.3",
    "gaussian:sigma=0.4",
    "hstripes:period=4,amplitude=1",
    "vstripes:period=6,amplitude=1",
    "checkerboard:cell=4,amplitude=1",
    "ramp:amplitude=1",
    "border:thickness=3,value=1",
]

args = parse(__doc__)
model = args.out_dir / "patterns_model.dune"
run(*base(args, "train"), "--hs", "1.8", "--out", str(args.out_dir / "patterns_train.csv"), "--save-model", str(model))
dump = ["dump-samples", "--mnist-dir", args.mnist_dir, "--seed", args.seed, "--out", str(args.out_dir / "patterns_samples")]
for p in PATTERNS:
    dump += ["--pattern", p]
run(*dump)

rows = []
for p in PATTERNS:
    path = args.out_dir / f"patterns_eval_{p.split(':')[0]}.csv"
    run("eval", "--mnist-dir", args.mnist_dir, "--seed", args.seed, "--load-model", str(model),
        "--hs", "1.8", "--pattern", p, "--out", str(path))
    with open(path, newline="") as fh:
        rows.append(next(csv.DictReader(fh)))
with open(args.out_dir / "patterns.csv", "w", newline="") as fh:
    w = csv.DictWriter(fh, fieldnames=["noise", "clean_acc", "noisy_acc", "hs"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r[k] for k in w.fieldnames})
