"""MNIST ingestion, test-time corruptions and the Magics input transform.

Images are float64 arrays with pixel values in [0, 1], either a single flat
image of 784 pixels or a ``(count, 784)`` stack.
"""

from __future__ import annotations

import gzip
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SIDE = 28
IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class BadMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class CountMismatchError(IdxError):
    pass


class PatternError(ValueError):
    """Unknown or malformed corruption spec."""


@dataclass
class LabeledDataset:
    images: np.ndarray
    labels: np.ndarray
    side: int = SIDE

    def __post_init__(self) -> None:
        if len(self.images) != len(self.labels):
            raise CountMismatchError(f"{len(self.images)} images but {len(self.labels)} labels")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, count: int) -> LabeledDataset:
        return LabeledDataset(self.images[:count], self.labels[:count], self.side)


def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _parse_idx(blob: bytes, magic: int, ndim: int, path) -> tuple[tuple[int, ...], bytes]:
    header = 4 + 4 * ndim
    if len(blob) < 4:
        raise TruncatedFileError(f"{path}: file shorter than its magic number")
    (found,) = struct.unpack_from(">I", blob, 0)
    if found != magic:
        raise BadMagicError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    if len(blob) < header:
        raise TruncatedFileError(f"{path}: truncated header")
    dims = struct.unpack_from(f">{ndim}I", blob, 4)
    expected = int(np.prod(dims))
    payload = blob[header:]
    if len(payload) < expected:
        raise TruncatedFileError(f"{path}: {len(payload)} data bytes, header promises {expected}")
    return dims, payload[:expected]


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Read an IDX image/label file pair (optionally gzipped), scaling bytes by 1/255."""
    dims, pixels = _parse_idx(_read_bytes(images_path), IMAGES_MAGIC, 3, images_path)
    (count,), raw_labels = _parse_idx(_read_bytes(labels_path), LABELS_MAGIC, 1, labels_path)
    if dims[0] != count:
        raise CountMismatchError(f"{images_path} has {dims[0]} images, {labels_path} has {count} labels")
    if dims[1] != dims[2]:
        raise IdxError(f"{images_path}: non-square images {dims[1]}x{dims[2]}")
    images = np.frombuffer(pixels, dtype=np.uint8).reshape(dims[0], dims[1] * dims[2])
    labels = np.frombuffer(raw_labels, dtype=np.uint8).astype(np.int64)
    if labels.size and labels.max() >= 10:
        raise IdxError(f"{labels_path}: label {labels.max()} outside [0, 10)")
    return LabeledDataset(images.astype(np.float64) / 255.0, labels, dims[1])


_SPLITS = {"train": "train", "test": "t10k"}


def _find(directory: Path, stem: str) -> Path:
    # both the canonical "train-images-idx3-ubyte" and the "train-images.idx3-ubyte" spelling occur
    for name in (stem, stem.replace("-idx", ".idx")):
        for suffix in ("", ".gz"):
            candidate = directory / f"{name}{suffix}"
            if candidate.exists():
                return candidate
    raise FileNotFoundError(f"no {stem}[.gz] in {directory}")


def mnist_paths(directory, split: str) -> tuple[Path, Path]:
    prefix = _SPLITS[split]
    directory = Path(directory)
    return (
        _find(directory, f"{prefix}-images-idx3-ubyte"),
        _find(directory, f"{prefix}-labels-idx1-ubyte"),
    )


def load_mnist(directory) -> tuple[LabeledDataset, LabeledDataset]:
    """(train, test) from a directory holding the four standard MNIST files."""
    return load_idx(*mnist_paths(directory, "train")), load_idx(*mnist_paths(directory, "test"))


def add_white_noise(images, n_s: float, rng: np.random.Generator) -> np.ndarray:
    """Mix every pixel with a fresh U(0, 1) draw at noise-to-signal ratio ``n_s``."""
    if n_s < 0:
        raise ValueError(f"n_s must be >= 0, got {n_s}")
    x = np.asarray(images, dtype=np.float64)
    if n_s == 0:
        return x.copy()
    u = rng.random(x.shape)
    return x / (n_s + 1.0) + (n_s / (n_s + 1.0)) * u


def magics(images, h_s: float) -> np.ndarray:
    """Affine stretch of [0, 1] onto [-h_s, 1 + h_s]; 0.5 is the fixed point."""
    return (1.0 + 2.0 * h_s) * np.asarray(images, dtype=np.float64) - h_s


def inverse_magics(transformed, h_s: float) -> np.ndarray:
    return (np.asarray(transformed, dtype=np.float64) + h_s) / (1.0 + 2.0 * h_s)


def magics_shift_for(n_s: float) -> float:
    """Shift used in the noise-level sweep: ``2 * n_s`` below n_s = 1, 1.8 from there on."""
    return 1.8 if n_s >= 1 else 2.0 * n_s


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in PATTERNS:
            raise PatternError(f"unknown pattern {self.kind!r}; choose from {sorted(PATTERNS)}")
        defaults = PATTERNS[self.kind]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise PatternError(f"{self.kind}: unknown parameter(s) {sorted(unknown)}")
        merged = {**defaults, **{k: float(v) for k, v in self.params.items()}}
        for key, value in merged.items():
            if not np.isfinite(value) or value < 0:
                raise PatternError(f"{self.kind}: {key} must be finite and >= 0, got {value}")
        object.__setattr__(self, "params", merged)

    @property
    def is_null(self) -> bool:
        return self.kind == "white" and self.params["n_s"] == 0

    def __str__(self) -> str:
        body = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.kind}:{body}"

    @classmethod
    def parse(cls, text: str) -> NoiseSpec:
        """Parse ``kind:key=value,key=value`` (the parameter part is optional)."""
        kind, _, body = text.strip().partition(":")
        params = {}
        for item in filter(None, (s.strip() for s in body.split(","))):
            key, eq, value = item.partition("=")
            if not eq:
                raise PatternError(f"malformed parameter {item!r} in {text!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise PatternError(f"non-numeric value {value!r} in {text!r}") from None
        return cls(kind.strip(), params)


PATTERNS: dict[str, dict[str, float]] = {
    "white": {"n_s": 0.0},
    "salt-pepper": {"density": 0.0},
    "gaussian": {"sigma": 0.0},
    "hstripes": {"period": 4.0, "amplitude": 0.0},
    "vstripes": {"period": 4.0, "amplitude": 0.0},
    "checkerboard": {"cell": 4.0, "amplitude": 0.0},
    "ramp": {"amplitude": 0.0},
    "border": {"thickness": 0.0, "value": 1.0},
}


def _blend(x: np.ndarray, mask: np.ndarray, amplitude: float) -> np.ndarray:
    return (x + amplitude * mask) / (1.0 + amplitude)


def _stripes(period: float, axis: int) -> np.ndarray:
    period = max(int(round(period)), 1)
    on = (np.arange(SIDE) % period) < (period + 1) // 2
    on = on.astype(np.float64)
    return np.broadcast_to(on[:, None] if axis == 0 else on[None, :], (SIDE, SIDE))


def apply_pattern(images, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Corrupt image(s) with a white-noise or background pattern, clamped to [0, 1]."""
    x = np.asarray(images, dtype=np.float64)
    p = spec.params

    # pointwise corruptions work on any shape; the rest need 28x28 grids
    if spec.kind == "white":
        return np.clip(add_white_noise(x, p["n_s"], rng), 0.0, 1.0)
    if spec.kind == "salt-pepper":
        hit = rng.random(x.shape) < p["density"]
        salt = rng.random(x.shape) < 0.5
        return np.where(hit, salt.astype(np.float64), x)
    if spec.kind == "gaussian":
        return np.clip(x + p["sigma"] * rng.standard_normal(x.shape), 0.0, 1.0)

    grid = x.reshape(-1, SIDE, SIDE)
    if spec.kind in ("hstripes", "vstripes"):
        mask = _stripes(p["period"], 0 if spec.kind == "hstripes" else 1)
        out = _blend(grid, mask, p["amplitude"])
    elif spec.kind == "checkerboard":
        cell = max(int(round(p["cell"])), 1)
        idx = np.arange(SIDE) // cell
        mask = ((idx[:, None] + idx[None, :]) % 2 == 0).astype(np.float64)
        out = _blend(grid, mask, p["amplitude"])
    elif spec.kind == "ramp":
        mask = np.broadcast_to(np.linspace(0.0, 1.0, SIDE)[None, :], (SIDE, SIDE))
        out = _blend(grid, mask, p["amplitude"])
    elif spec.kind == "border":
        t = int(round(p["thickness"]))
        out = grid.copy()
        if t > 0:
            frame = np.zeros((SIDE, SIDE), dtype=bool)
            frame[:t, :] = frame[-t:, :] = frame[:, :t] = frame[:, -t:] = True
            out[:, frame] = p["value"]
    else:  # pragma: no cover - NoiseSpec validates kind
        raise PatternError(spec.kind)
    return np.clip(out, 0.0, 1.0).reshape(x.shape)


def corrupt_dataset(images, spec: NoiseSpec | None, seed: int) -> np.ndarray:
    """Corrupt every image with its own stream seeded by ``(seed, image index)``.

    The result does not depend on processing order, so the same images get the
    same noise for every method evaluated with the same seed.
    """
    images = np.asarray(images, dtype=np.float64)
    if spec is None or spec.is_null:
        return images.copy()
    out = np.empty_like(images)
    for i in range(len(images)):
        rng = np.random.default_rng([seed, i])
        out[i] = apply_pattern(images[i], spec, rng)
    return out


def write_pgm(image, path) -> None:
    """Binary greyscale PGM (P5, maxval 255) of one 28x28 image."""
    pixels = np.asarray(image, dtype=np.float64).reshape(SIDE, SIDE)
    data = np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{SIDE} {SIDE}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Raw bytes of a P5 file written by :func:`write_pgm`, shape (rows, cols)."""
    blob = Path(path).read_bytes()
    header = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", blob)
    if header is None:
        raise ValueError(f"{path}: not a binary PGM")
    cols, rows, maxval = (int(g) for g in header.groups())
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    data = blob[header.end() : header.end() + rows * cols]
    return np.frombuffer(data, dtype=np.uint8).reshape(rows, cols)
