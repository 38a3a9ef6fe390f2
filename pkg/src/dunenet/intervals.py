"""Interval-valued parameters.

Every scalar parameter of a network is stored as a closed interval
``[lower[i], upper[i]]``. A concrete network is obtained by drawing one value
uniformly from each interval; after the optimizer moves the drawn values, the
shift is split between the two endpoints according to where the draw sat
inside its interval.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MODEL_MAGIC = b"DUNE"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file cannot be decoded."""


@dataclass(frozen=True)
class DuneHyperparams:
    prior_width: float = 0.075
    reg_strength: float = 0.1
    min_width: float = 0.15

    def __post_init__(self) -> None:
        for name in ("prior_width", "reg_strength", "min_width"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")


@dataclass
class IntervalParams:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError(
                f"lower/upper must be 1-d of equal length, got {self.lower.shape} and {self.upper.shape}"
            )
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("interval endpoints must be finite")

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def is_ordered(self) -> bool:
        return bool(np.all(self.lower <= self.upper))

    def copy(self) -> IntervalParams:
        return IntervalParams(self.lower.copy(), self.upper.copy())


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def init_intervals(theta, d: float) -> IntervalParams:
    """Widen a point parameter vector into intervals ``[theta - d, theta + d]``."""
    if not np.isfinite(d) or d < 0:
        raise ValueError(f"prior width must be finite and >= 0, got {d}")
    theta = _as_vector(theta, "theta")
    return IntervalParams(theta - d, theta + d)


def sample(params: IntervalParams, rng: np.random.Generator) -> np.ndarray:
    """Instantiate a concrete parameter vector, one uniform draw per interval.

    Exactly ``params.n`` draws are taken from ``rng``, in index order. A
    zero-width interval yields its endpoint exactly.
    """
    u = rng.random(params.n)
    values = params.lower + u * (params.upper - params.lower)
    # guard against a one-ulp overshoot of the upper endpoint
    return np.minimum(values, params.upper)


def update_intervals(params: IntervalParams, theta_old, theta_new) -> IntervalParams:
    """Move the endpoints after the sampled values moved from ``theta_old`` to ``theta_new``.

    With ``p`` the relative position of ``theta_old`` in its interval, the
    lower endpoint moves by ``(1 - p) * delta`` and the upper by ``p * delta``.
    Zero-width intervals shift rigidly by ``delta``, which is exactly a plain
    parameter update. The result may have widths below any floor (or even
    negative); follow with :func:`enforce_min_width`.
    """
    theta_old = _as_vector(theta_old, "theta_old")
    theta_new = _as_vector(theta_new, "theta_new")
    if theta_old.shape != (params.n,) or theta_new.shape != (params.n,):
        raise ValueError(f"parameter vectors must have length {params.n}")
    outside = (theta_old < params.lower) | (theta_old > params.upper)
    if np.any(outside):
        i = int(np.flatnonzero(outside)[0])
        raise ValueError(
            f"theta_old[{i}]={theta_old[i]!r} lies outside [{params.lower[i]!r}, {params.upper[i]!r}]"
        )

    delta = theta_new - theta_old
    width = params.upper - params.lower
    degenerate = width == 0
    safe_width = np.where(degenerate, 1.0, width)
    p = np.where(degenerate, 0.0, (theta_old - params.lower) / safe_width)

    lower = np.where(degenerate, params.lower + delta, params.lower + (1.0 - p) * delta)
    upper = np.where(degenerate, params.upper + delta, params.upper + p * delta)
    return IntervalParams(lower, upper)


def apply_width_regularization(params: IntervalParams, beta: float, step_size: float) -> IntervalParams:
    """One gradient step on the penalty ``sum(beta * width**2)`` taken on the endpoints.

    Each interval shrinks symmetrically by ``2 * step_size * beta * width`` on
    each side, so midpoints never move.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if step_size <= 0:
        raise ValueError(f"step_size must be > 0, got {step_size}")
    if beta == 0:
        return params.copy()
    shrink = step_size * 2.0 * beta * (params.upper - params.lower)
    return IntervalParams(params.lower + shrink, params.upper - shrink)


def enforce_min_width(params: IntervalParams, w_min: float) -> IntervalParams:
    """Re-centre every interval narrower than ``w_min`` to width exactly ``w_min``.

    The midpoint is taken from the incoming endpoints before either is
    changed, so inverted intervals are repaired around their centre.
    """
    if not np.isfinite(w_min) or w_min < 0:
        raise ValueError(f"w_min must be finite and >= 0, got {w_min}")
    lower = params.lower.copy()
    upper = params.upper.copy()
    narrow = (upper - lower) < w_min
    if np.any(narrow):
        mid = 0.5 * (lower[narrow] + upper[narrow])
        lower[narrow] = mid - 0.5 * w_min
        upper[narrow] = mid + 0.5 * w_min
    return IntervalParams(lower, upper)


def save_model(path, params: IntervalParams, layer_sizes) -> None:
    """Write intervals plus topology to the flat little-endian model format.

    Layout: ``b"DUNE"``, u32 version, u64 n, n f64 lower values, n f64 upper
    values, u32 layer count, then one u32 per layer size.
    """
    sizes = [int(s) for s in layer_sizes]
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<IQ", MODEL_VERSION, params.n))
        fh.write(params.lower.astype("<f8").tobytes())
        fh.write(params.upper.astype("<f8").tobytes())
        fh.write(struct.pack("<I", len(sizes)))
        fh.write(struct.pack(f"<{len(sizes)}I", *sizes))


def load_model(path) -> tuple[IntervalParams, list[int]]:
    blob = Path(path).read_bytes()
    if blob[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 16:
        raise ModelFormatError(f"{path}: truncated header")
    version, n = struct.unpack_from("<IQ", blob, 4)
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    offset = 16
    need = offset + 16 * n + 4
    if len(blob) < need:
        raise ModelFormatError(f"{path}: truncated parameter block")
    lower = np.frombuffer(blob, dtype="<f8", count=n, offset=offset).astype(np.float64)
    upper = np.frombuffer(blob, dtype="<f8", count=n, offset=offset + 8 * n).astype(np.float64)
    offset += 16 * n
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if len(blob) != offset + 4 * count:
        raise ModelFormatError(f"{path}: topology block has wrong length")
    sizes = list(struct.unpack_from(f"<{count}I", blob, offset))
    return IntervalParams(lower, upper), sizes
