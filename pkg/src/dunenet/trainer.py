"""Training loop for interval-parameter networks and the deterministic baseline.

A dune step is: sample concrete weights, backpropagate on the sampled
network, let the optimizer move the sampled weights, push that move into
the interval endpoints, shrink widths by the width penalty, then re-impose
the width floor.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from . import network, optim
from .data import LabeledDataset, NoiseSpec, corrupt_dataset, magics, magics_shift_for
from .intervals import (
    DuneHyperparams,
    IntervalParams,
    apply_width_regularization,
    enforce_min_width,
    init_intervals,
    sample,
    update_intervals,
)
from .network import Topology

log = logging.getLogger(__name__)

METHODS = ("dune-magics", "plain-magics", "plain")
EVAL_MODES = ("sample", "midpoint")


@dataclass(frozen=True)
class RunConfig:
    layer_sizes: tuple[int, ...] = (784, 150, 10)
    method: str = "dune-magics"
    epochs: int = 30
    batch_size: int = 100
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    # None means min_width / 2, so fresh intervals start exactly at the floor
    prior_width: float | None = None
    reg_strength: float = 0.1
    min_width: float = 0.15
    # None means the noise-level rule (1.8 for n_s >= 1, else 2 * n_s)
    h_s: float | None = None
    noise: str = "white:n_s=0"
    seed: int = 42
    eval_mode: str = "sample"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.eval_mode not in EVAL_MODES:
            raise ValueError(f"eval_mode must be one of {EVAL_MODES}, got {self.eval_mode!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.h_s is not None and not self.h_s > -0.5:
            raise ValueError(f"h_s must exceed -0.5, got {self.h_s}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        self.dune_hyperparams  # validates the interval knobs
        self.noise_spec

    @property
    def topology(self) -> Topology:
        return Topology(self.layer_sizes)

    @property
    def is_dune(self) -> bool:
        return self.method == "dune-magics"

    @property
    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec.parse(self.noise)

    @property
    def shift(self) -> float:
        """The Magics shift actually applied to inputs."""
        if self.method == "plain":
            return 0.0
        if self.h_s is not None:
            return self.h_s
        spec = self.noise_spec
        return magics_shift_for(spec.params["n_s"]) if spec.kind == "white" else 1.8

    @property
    def dune_hyperparams(self) -> DuneHyperparams:
        d = self.min_width / 2 if self.prior_width is None else self.prior_width
        return DuneHyperparams(d, self.reg_strength, self.min_width)


@dataclass
class MetricsRecord:
    epoch: int
    train_loss: float
    clean_acc: float
    noisy_acc: float
    mean_width: float
    seconds: float


@dataclass
class TrainState:
    """Either ``intervals`` (dune) or ``theta`` (plain) is set."""

    opt: optim.OptimizerState
    sample_rng: np.random.Generator
    intervals: IntervalParams | None = None
    theta: np.ndarray | None = None
    steps: int = 0

    @property
    def mean_width(self) -> float:
        return float(np.mean(self.intervals.width)) if self.intervals is not None else 0.0

    @property
    def min_width(self) -> float:
        return float(np.min(self.intervals.width)) if self.intervals is not None else 0.0


@dataclass
class Streams:
    """Independent generators derived from one master seed."""

    init: np.random.Generator
    shuffle: np.random.Generator
    sample: np.random.Generator
    eval: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> Streams:
        children = np.random.SeedSequence(seed).spawn(4)
        return cls(*(np.random.default_rng(c) for c in children))


def init_state(cfg: RunConfig, streams: Streams) -> TrainState:
    topo = cfg.topology
    theta0 = network.init_weights(topo, streams.init)
    opt = optim.make_optimizer(cfg.optimizer, topo.n_params, cfg.learning_rate)
    if cfg.is_dune:
        iv = init_intervals(theta0, cfg.dune_hyperparams.prior_width)
        iv = enforce_min_width(iv, cfg.min_width)
        return TrainState(opt, streams.sample, intervals=iv)
    return TrainState(opt, streams.sample, theta=theta0)


def train_step(state: TrainState, inputs, labels, cfg: RunConfig) -> tuple[TrainState, float]:
    """One optimisation step on an already Magics-transformed batch."""
    topo = cfg.topology
    if state.intervals is None:
        value, grad = network.backward(topo, state.theta, inputs, labels)
        theta, opt = optim.step(state.opt, state.theta, grad)
        return replace(state, theta=theta, opt=opt, steps=state.steps + 1), value

    theta_old = sample(state.intervals, state.sample_rng)
    value, grad = network.backward(topo, theta_old, inputs, labels)
    theta_new, opt = optim.step(state.opt, theta_old, grad)
    iv = update_intervals(state.intervals, theta_old, theta_new)
    if cfg.reg_strength > 0:
        iv = apply_width_regularization(iv, cfg.reg_strength, cfg.learning_rate)
    iv = enforce_min_width(iv, cfg.min_width)
    return replace(state, intervals=iv, opt=opt, steps=state.steps + 1), value


def eval_params(state: TrainState, mode: str, rng: np.random.Generator) -> np.ndarray:
    """Concrete weights for evaluation: one fresh draw, or the interval midpoints."""
    if state.intervals is None:
        return state.theta
    if mode == "sample":
        return sample(state.intervals, rng)
    if mode == "midpoint":
        return state.intervals.midpoint
    raise ValueError(f"eval mode must be one of {EVAL_MODES}, got {mode!r}")


def prepare_test_inputs(dataset: LabeledDataset, cfg: RunConfig, noisy: bool = True) -> np.ndarray:
    """Corrupt (if ``noisy``) and then Magics-transform a test set."""
    images = corrupt_dataset(dataset.images, cfg.noise_spec, cfg.seed) if noisy else dataset.images
    return magics(images, cfg.shift)


def evaluate(
    state: TrainState,
    dataset: LabeledDataset,
    cfg: RunConfig,
    mode: str | None = None,
    rng: np.random.Generator | None = None,
    noisy: bool = True,
) -> float:
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    mode = mode or cfg.eval_mode
    rng = rng if rng is not None else Streams.from_seed(cfg.seed).eval
    theta = eval_params(state, mode, rng)
    inputs = prepare_test_inputs(dataset, cfg, noisy)
    return network.accuracy(cfg.topology, theta, inputs, dataset.labels)


def fit(
    cfg: RunConfig,
    train: LabeledDataset,
    test: LabeledDataset,
    on_epoch: Callable[[MetricsRecord], None] | None = None,
) -> tuple[TrainState, list[MetricsRecord]]:
    """Train for ``cfg.epochs`` epochs, evaluating clean and noisy test accuracy after each."""
    streams = Streams.from_seed(cfg.seed)
    state = init_state(cfg, streams)
    topo = cfg.topology
    shift = cfg.shift

    clean_inputs = magics(test.images, shift)
    noisy_inputs = clean_inputs if cfg.noise_spec.is_null else prepare_test_inputs(test, cfg)

    records = []
    started = time.perf_counter()
    n = len(train)
    for epoch in range(1, cfg.epochs + 1):
        order = streams.shuffle.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch = magics(train.images[idx], shift)
            state, value = train_step(state, batch, train.labels[idx], cfg)
            losses.append(value)

        theta = eval_params(state, cfg.eval_mode, streams.eval)
        clean = network.accuracy(topo, theta, clean_inputs, test.labels)
        noisy = clean if noisy_inputs is clean_inputs else network.accuracy(topo, theta, noisy_inputs, test.labels)
        record = MetricsRecord(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            clean_acc=clean,
            noisy_acc=noisy,
            mean_width=state.mean_width,
            seconds=time.perf_counter() - started,
        )
        records.append(record)
        log.info(
            "%s epoch %d loss %.4f clean %.4f noisy %.4f width %.4f (%.0fs)",
            cfg.method, epoch, record.train_loss, clean, noisy, record.mean_width, record.seconds,
        )
        if on_epoch is not None:
            on_epoch(record)
    return state, records


def run_experiment(cfg: RunConfig, train: LabeledDataset, test: LabeledDataset, **kwargs) -> list[MetricsRecord]:
    return fit(cfg, train, test, **kwargs)[1]


def config_dict(cfg: RunConfig) -> dict:
    out = asdict(cfg)
    out["h_s_effective"] = cfg.shift
    out["prior_width_effective"] = cfg.dune_hyperparams.prior_width
    return out
