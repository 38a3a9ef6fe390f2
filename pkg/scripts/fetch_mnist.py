#!/usr/bin/env python
"""Download MNIST into a directory the ``--mnist-dir`` flag can point at.

Tries the usual gzip mirrors first, then falls back to the ``MNIST_dir``
source distribution on PyPI, which ships the four raw IDX files. Every file is
checked against the canonical MD5 of the decompressed IDX bytes.

    python scripts/fetch_mnist.py data/mnist
"""

import argparse
import gzip
import hashlib
import io
import sys
import tarfile
import urllib.request
from pathlib import Path

FILES = {
    "train-images-idx3-ubyte": "6bbc9ace898e44ae57da46a324031adb",
    "train-labels-idx1-ubyte": "a25bea736e30d166cdddb491f175f624",
    "t10k-images-idx3-ubyte": "2646ac647ad5339dbf082846283269ea",
    "t10k-labels-idx1-ubyte": "27ae3e4e09519cfbb04c329615203637",
}
MIRRORS = [
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "http://yann.lecun.com/exdb/mnist/",
]
PYPI_SDIST = (
    "https://pypi.org/packages/be/d1/6db83a78917574d10bdbfa61c1d563300770d643735f6cf355a6f9adcabe/MNIST_dir-0.2.tar.gz"
)


def fetch(url: str, timeout: float = 60) -> bytes:
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def from_mirrors() -> dict[str, bytes]:
    for base in MIRRORS:
        try:
            return {name: gzip.decompress(fetch(base + name + ".gz")) for name in FILES}
        except OSError as exc:
            print(f"mirror {base} failed: {exc}", file=sys.stderr)
    return {}


def from_pypi() -> dict[str, bytes]:
    try:
        blob = fetch(PYPI_SDIST, timeout=300)
    except OSError as exc:
        print(f"PyPI fallback failed: {exc}", file=sys.stderr)
        return {}
    found = {}
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        for member in tar.getmembers():
            base = Path(member.name).name
            # the sdist spells the files "train-images.idx3-ubyte"
            name = base.replace(".idx", "-idx")
            if name in FILES and not base.startswith("._"):
                found[name] = tar.extractfile(member).read()
    return found


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("dest", type=Path, nargs="?", default=Path("data/mnist"))
    args = ap.parse_args(argv)

    files = from_mirrors() or from_pypi()
    if set(files) != set(FILES):
        print("could not obtain MNIST from any source", file=sys.stderr)
        return 1
    args.dest.mkdir(parents=True, exist_ok=True)
    for name, blob in files.items():
        digest = hashlib.md5(blob).hexdigest()
        if digest != FILES[name]:
            print(f"{name}: md5 {digest} does not match {FILES[name]}", file=sys.stderr)
            return 1
        (args.dest / name).write_bytes(blob)
    print(f"wrote {len(files)} files to {args.dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
