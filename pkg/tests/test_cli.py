import csv
import io
import math
import subprocess
import sys

import pytest

from dunenet.cli import CURVE_HEADER, METRICS_HEADER, SWEEP_HEADER, main
from dunenet.intervals import load_model

FAST = ["--epochs", "1", "--batch-size", "50", "--hidden", "16"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def assert_finite_rows(rows, skip=()):
    for row in rows[1:]:
        for i, cell in enumerate(row):
            if i not in skip:
                assert math.isfinite(float(cell))


def test_train_writes_metrics_csv(tiny_mnist, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["train", "--mnist-dir", str(tiny_mnist), "--out", str(out), *FAST, "--epochs", "3"]) == 0
    rows = read_csv(out)
    assert rows[0] == METRICS_HEADER
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]
    assert_finite_rows(rows)


def test_train_is_byte_reproducible(tiny_mnist, tmp_path):
    args = ["train", "--mnist-dir", str(tiny_mnist), *FAST, "--ns", "1", "--no-timing", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_train_to_stdout(tiny_mnist, capsys):
    assert main(["train", "--mnist-dir", str(tiny_mnist), *FAST]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == METRICS_HEADER and len(rows) == 2


def test_save_and_eval_model(tiny_mnist, tmp_path, capsys):
    model = tmp_path / "m.dune"
    assert main(["train", "--mnist-dir", str(tiny_mnist), *FAST, "--save-model", str(model), "--out", "-"]) == 0
    iv, sizes = load_model(model)
    assert sizes == [784, 16, 10] and iv.n == 785 * 16 + 17 * 10
    capsys.readouterr()
    out = tmp_path / "e.csv"
    assert main(["eval", "--mnist-dir", str(tiny_mnist), "--load-model", str(model), "--ns", "0.5", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["clean_acc", "noisy_acc", "hs", "noise"]
    assert rows[1][2] == "1"
    assert 0 <= float(rows[1][0]) <= 1


def test_plain_model_saves_as_zero_width(tiny_mnist, tmp_path):
    model = tmp_path / "p.dune"
    assert main(["train", "--mnist-dir", str(tiny_mnist), *FAST, "--method", "plain", "--save-model", str(model), "--out", str(tmp_path / "x.csv")]) == 0
    iv, _ = load_model(model)
    assert (iv.width == 0).all()


@pytest.mark.parametrize(
    "value, hs",
    [("1.5", "1.8"), ("0.5", "1"), ("1", "1.8"), ("0", "0")],
)
def test_sweep_noise_axis_uses_shift_rule(tiny_mnist, tmp_path, value, hs):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--mnist-dir", str(tiny_mnist), *FAST, "--axis", "n_s", "--values", value, "--methods", "dune-magics", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == SWEEP_HEADER
    assert len(rows) == 2
    assert rows[1][:4] == ["dune-magics", "n_s", f"{float(value):g}", hs]
    assert_finite_rows(rows, skip=(0, 1))


def test_sweep_rows_sorted_and_curves(tiny_mnist, tmp_path):
    out, curves = tmp_path / "s.csv", tmp_path / "c.csv"
    code = main([
        "sweep", "--mnist-dir", str(tiny_mnist), *FAST, "--epochs", "2", "--axis", "w_min",
        "--values", "0.3,0.05", "--methods", "plain,dune-magics", "--hs", "1.8", "--ns", "1.5",
        "--out", str(out), "--curves", str(curves),
    ])
    assert code == 0
    rows = read_csv(out)
    assert [(r[0], r[2]) for r in rows[1:]] == [("plain", "0.05"), ("plain", "0.3"), ("dune-magics", "0.05"), ("dune-magics", "0.3")]
    assert [r[3] for r in rows[1:]] == ["0", "0", "1.8", "1.8"]
    crows = read_csv(curves)
    assert crows[0] == CURVE_HEADER and len(crows) == 1 + 4 * 2


def test_dump_samples(tiny_mnist, tmp_path):
    out = tmp_path / "pgm"
    specs = ["white:n_s=0", "white:n_s=1.5", "checkerboard:cell=4,amplitude=1"]
    args = ["dump-samples", "--mnist-dir", str(tiny_mnist), "--index", "3", "--out", str(out)]
    for s in specs:
        args += ["--pattern", s]
    assert main(args) == 0
    files = sorted(out.iterdir())
    assert len(files) == len(specs) + 1
    original = out / "00003_00_original.pgm"
    assert (out / "00003_01_white.pgm").read_bytes() == original.read_bytes()
    first = {f.name: f.read_bytes() for f in files}
    assert main(args) == 0
    assert {f.name: f.read_bytes() for f in out.iterdir()} == first


def test_exit_codes(tiny_mnist, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--epochs", "1"])
    assert exc.value.code == 2
    assert "--mnist-dir" in capsys.readouterr().err
    assert main(["dump-samples", "--mnist-dir", str(tiny_mnist), "--pattern", "plaid:x=1", "--out", str(tmp_path)]) == 2
    assert main(["train", "--mnist-dir", str(tiny_mnist), *FAST, "--hs", "-0.7"]) == 2
    assert main(["sweep", "--mnist-dir", str(tiny_mnist), *FAST, "--axis", "n_s", "--values", "-1"]) == 2
    assert main(["train", "--mnist-dir", str(tmp_path / "missing"), *FAST]) == 1
    broken = tmp_path / "broken"
    broken.mkdir()
    for name in ["train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]:
        (broken / name).write_bytes(b"\x00\x00\x08\x99" + bytes(12))
    assert main(["train", "--mnist-dir", str(broken), *FAST]) == 1
    bad_model = tmp_path / "bad.dune"
    bad_model.write_bytes(b"XXXX")
    assert main(["eval", "--mnist-dir", str(tiny_mnist), "--load-model", str(bad_model)]) == 1


def test_module_entry_point_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dunenet", "train"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "dunenet", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ["train", "sweep", "eval", "dump-samples"]:
        assert sub in proc.stdout


@pytest.mark.mnist
def test_train_one_epoch_real_mnist(mnist_dir, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["train", "--mnist-dir", str(mnist_dir), "--epochs", "1", "--batch-size", "100", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2
    assert float(rows[1][2]) > 0.85
