import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dunenet import optim


def scripted_adam(theta, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Scalar-by-scalar Adam recurrence, written out from its textbook definition."""
    theta = list(theta)
    m = [0.0] * len(theta)
    v = [0.0] * len(theta)
    for t, g in enumerate(grads, start=1):
        for i in range(len(theta)):
            m[i] = b1 * m[i] + (1 - b1) * g[i]
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i]
            m_hat = m[i] / (1 - b1**t)
            v_hat = v[i] / (1 - b2**t)
            theta[i] -= lr * m_hat / (math.sqrt(v_hat) + eps)
    return theta


def test_sgd_example():
    state = optim.make_optimizer("sgd", 1, 0.1)
    theta, state = optim.step(state, [1.0], [2.0])
    assert theta[0] == pytest.approx(0.8)
    assert state.t == 1


def test_momentum_recurrence():
    state = optim.make_optimizer("momentum", 1, 0.1, momentum=0.5)
    theta, state = optim.step(state, [1.0], [1.0])
    assert theta[0] == pytest.approx(0.9)
    theta, state = optim.step(state, theta, [1.0])
    # v = 0.5 * -0.1 - 0.1
    assert theta[0] == pytest.approx(0.9 - 0.15)


def test_adam_zero_gradient_first_step():
    state = optim.make_optimizer("adam", 3, 1e-3)
    theta, state = optim.step(state, [1.0, -2.0, 0.5], np.zeros(3))
    np.testing.assert_array_equal(theta, [1.0, -2.0, 0.5])
    assert state.t == 1


@pytest.mark.parametrize("g", [2.0, -0.3, 1e-3])
def test_adam_first_step_is_sign_step(g):
    state = optim.make_optimizer("adam", 1, 1e-3)
    theta, _ = optim.step(state, [0.0], [g])
    assert theta[0] == pytest.approx(-1e-3 * g / (abs(g) + 1e-8), rel=1e-12)


def test_adam_matches_scripted_oracle_ten_steps():
    rng = np.random.default_rng(0)
    theta0 = rng.standard_normal(7)
    grads = [rng.standard_normal(7) * 10 ** rng.uniform(-3, 1) for _ in range(10)]
    state = optim.make_optimizer("adam", 7, 1e-3)
    theta = theta0
    for g in grads:
        theta, state = optim.step(state, theta, g)
    expected = scripted_adam(theta0, grads)
    np.testing.assert_allclose(theta, expected, rtol=0, atol=1e-12)
    assert state.t == 10


@pytest.mark.parametrize("algorithm", optim.ALGORITHMS)
@given(seed=st.integers(0, 2**31), split=st.integers(1, 9))
def test_blocks_are_independent(algorithm, seed, split):
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(10)
    grads = [rng.standard_normal(10) for _ in range(3)]
    whole = optim.make_optimizer(algorithm, 10, 0.01)
    left = optim.make_optimizer(algorithm, split, 0.01)
    right = optim.make_optimizer(algorithm, 10 - split, 0.01)
    tw, tl, tr = theta, theta[:split], theta[split:]
    for g in grads:
        tw, whole = optim.step(whole, tw, g)
        tl, left = optim.step(left, tl, g[:split])
        tr, right = optim.step(right, tr, g[split:])
    np.testing.assert_array_equal(tw, np.concatenate([tl, tr]))


def test_step_is_pure_and_deterministic():
    state = optim.make_optimizer("adam", 3, 1e-3)
    a, sa = optim.step(state, [1.0, 2.0, 3.0], [0.1, -0.2, 0.3])
    b, sb = optim.step(state, [1.0, 2.0, 3.0], [0.1, -0.2, 0.3])
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(sa.m, sb.m)
    assert state.t == 0 and not state.m.any()


def test_errors():
    with pytest.raises(ValueError):
        optim.make_optimizer("rmsprop", 3, 0.1)
    with pytest.raises(ValueError):
        optim.make_optimizer("sgd", 3, 0.0)
    state = optim.make_optimizer("adam", 3, 0.1)
    with pytest.raises(ValueError):
        optim.step(state, np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError):
        optim.step(state, np.zeros(4), np.zeros(4))
