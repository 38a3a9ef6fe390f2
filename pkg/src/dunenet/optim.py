"""First-order optimizers as pure transitions ``(state, theta, grad) -> (theta', state')``.

State is indexed by parameter position, so it carries over unchanged when
the concrete parameter values are resampled between steps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

ALGORITHMS = ("sgd", "momentum", "adam")


@dataclass(frozen=True)
class OptimizerState:
    algorithm: str
    learning_rate: float
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    # velocity for momentum, first moment for adam
    m: np.ndarray | None = None
    v: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown optimizer {self.algorithm!r}; choose from {ALGORITHMS}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


def make_optimizer(algorithm: str, n: int, learning_rate: float, **kwargs) -> OptimizerState:
    state = OptimizerState(algorithm, learning_rate, **kwargs)
    if algorithm == "momentum":
        state = replace(state, m=np.zeros(n))
    elif algorithm == "adam":
        state = replace(state, m=np.zeros(n), v=np.zeros(n))
    return state


def step(state: OptimizerState, theta, grad) -> tuple[np.ndarray, OptimizerState]:
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise ValueError(f"theta {theta.shape} and grad {grad.shape} differ in shape")
    if state.m is not None and state.m.shape != theta.shape:
        raise ValueError(f"optimizer state has length {state.m.shape[0]}, parameters {theta.shape[0]}")
    lr = state.learning_rate

    if state.algorithm == "sgd":
        return theta - lr * grad, replace(state, t=state.t + 1)

    if state.algorithm == "momentum":
        velocity = state.momentum * state.m - lr * grad
        return theta + velocity, replace(state, m=velocity, t=state.t + 1)

    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grad * grad)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_theta, replace(state, m=m, v=v, t=t)
