"""Interval-parameter ("dune") networks with the Magics input shift, trained from scratch in numpy."""

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
from .trainer import MetricsRecord, RunConfig, fit, run_experiment

__version__ = "0.1.0"
