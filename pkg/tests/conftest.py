import os
import struct
from pathlib import Path

import numpy as np
import pytest

DEFAULT_MNIST_DIRS = ["/root/data/mnist", str(Path(__file__).resolve().parents[1] / "data" / "mnist")]


def find_mnist_dir():
    candidates = [os.environ.get("DUNENET_MNIST_DIR")] + DEFAULT_MNIST_DIRS
    for c in filter(None, candidates):
        d = Path(c)
        if any(d.glob("train-images*")) and any(d.glob("t10k-labels*")):
            return d
    return None


@pytest.fixture(scope="session")
def mnist_dir():
    d = find_mnist_dir()
    if d is None:
        pytest.skip("MNIST not found; set DUNENET_MNIST_DIR or run scripts/fetch_mnist.py")
    return d


@pytest.fixture(scope="session")
def mnist(mnist_dir):
    from dunenet.data import load_mnist

    return load_mnist(mnist_dir)


def write_idx_pair(directory, prefix, images, labels):
    """Write uint8 images (count, 28*28) and labels in the standard MNIST file naming."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    count = len(labels)
    (directory / f"{prefix}-images-idx3-ubyte").write_bytes(
        struct.pack(">IIII", 0x803, count, 28, 28) + np.asarray(images, dtype=np.uint8).tobytes()
    )
    (directory / f"{prefix}-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x801, count) + np.asarray(labels, dtype=np.uint8).tobytes()
    )


@pytest.fixture
def tiny_mnist(tmp_path):
    """A learnable synthetic MNIST stand-in: class k lights up row block k."""
    rng = np.random.default_rng(0)

    def make(count):
        labels = rng.integers(0, 10, count)
        grid = rng.integers(0, 40, (count, 28, 28))
        for i, k in enumerate(labels):
            grid[i, 2 * k + 3 : 2 * k + 6, 4:24] = 230
        return grid.reshape(count, 784), labels

    d = tmp_path / "mnist"
    write_idx_pair(d, "train", *make(300))
    write_idx_pair(d, "t10k", *make(60))
    return d


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
