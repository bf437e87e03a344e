"""Tiny models: frozen forwards, finite-difference backprop, Adam, schedules."""

import math

import numpy as np
import pytest

from srlkit.models import (
    ModelSpec,
    ParamSet,
    adam_step,
    constant_schedule,
    forward,
    forward_backward,
    huber_loss,
    init_params,
    ScheduleSpec,
)


def params_from_values(spec, values):
    values = np.asarray(values, dtype=np.float64)
    return ParamSet(values, np.zeros_like(values), np.zeros_like(values), 0)


def test_linear_identity_forward():
    spec = ModelSpec(kind="linear", in_dim=3, out_dim=3)
    values = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    params = params_from_values(spec, values)
    x = np.array([0.5, -1.0, 2.0])
    np.testing.assert_array_equal(forward(spec, params, x), x)


def test_linear_batched_forward():
    spec = ModelSpec(kind="linear", in_dim=2, out_dim=1)
    params = params_from_values(spec, [2.0, -1.0, 0.5])  # W=[2,-1], b=0.5
    x = np.array([[1.0, 1.0], [0.0, 2.0]])
    np.testing.assert_allclose(forward(spec, params, x), [[1.5], [-1.5]])


def test_negative_absolute_forward():
    spec = ModelSpec(kind="linear", in_dim=1, out_dim=1, activation="negative_absolute")
    params = params_from_values(spec, [3.0, 0.0])
    assert forward(spec, params, np.array([2.0]))[0] == -6.0
    assert forward(spec, params, np.array([-2.0]))[0] == -6.0
    assert forward(spec, params, np.array([0.0]))[0] == 0.0


def test_negative_absolute_subgradient_at_zero():
    # d(-|z|)/dz at z=0 is taken as -1 (sign(0) := +1).
    spec = ModelSpec(kind="linear", in_dim=1, out_dim=1, activation="negative_absolute")
    params = params_from_values(spec, [1.0, 0.0])
    _, grad = forward_backward(spec, params, np.array([[0.0]]), np.array([[1.0]]))
    # grad wrt bias is the activation derivative itself.
    assert grad[1] == -1.0


def test_mlp2_hand_value():
    # All-ones weights, zero biases, one input, two hidden units:
    # y = tanh(0.5) + tanh(0.5).
    spec = ModelSpec(kind="mlp2", in_dim=1, out_dim=1, hidden_dim=2)
    values = np.concatenate([[1.0, 1.0], [0.0, 0.0], [1.0, 1.0], [0.0]])
    params = params_from_values(spec, values)
    out = forward(spec, params, np.array([0.5]))[0]
    assert out == pytest.approx(2.0 * math.tanh(0.5), abs=1e-15)


@pytest.mark.parametrize(
    "spec",
    [
        ModelSpec(kind="linear", in_dim=7, out_dim=1, activation="negative_absolute"),
        ModelSpec(kind="linear", in_dim=8, out_dim=1),
        ModelSpec(kind="mlp2", in_dim=10, out_dim=1, hidden_dim=5),
        ModelSpec(kind="mlp2", in_dim=6, out_dim=2, hidden_dim=4),
    ],
)
def test_backward_matches_finite_differences(spec):
    rng = np.random.default_rng(42)
    params = init_params(spec, rng)
    x = rng.normal(size=(3, spec.in_dim))
    upstream = rng.normal(size=(3, spec.out_dim))

    def scalar_loss(values):
        p = params_from_values(spec, values)
        return float(np.sum(forward(spec, p, x) * upstream))

    _, grad = forward_backward(spec, params, x, upstream)
    h = 1e-6
    for i in range(len(params.values)):
        up = params.values.copy()
        up[i] += h
        down = params.values.copy()
        down[i] -= h
        fd = (scalar_loss(up) - scalar_loss(down)) / (2 * h)
        assert abs(fd - grad[i]) <= 1e-6 * max(1.0, abs(grad[i]))


def test_forward_backward_consistent_outputs():
    spec = ModelSpec(kind="mlp2", in_dim=4, out_dim=1, hidden_dim=3)
    rng = np.random.default_rng(1)
    params = init_params(spec, rng)
    x = rng.normal(size=(5, 4))
    y, _ = forward_backward(spec, params, x, np.ones((5, 1)))
    np.testing.assert_array_equal(y, forward(spec, params, x))


def test_init_bounds_and_determinism():
    spec = ModelSpec(kind="mlp2", in_dim=10, out_dim=1, hidden_dim=5)
    p1 = init_params(spec, np.random.default_rng(5))
    p2 = init_params(spec, np.random.default_rng(5))
    np.testing.assert_array_equal(p1.values, p2.values)
    assert len(p1.values) == spec.n_params == 10 * 5 + 5 + 5 + 1
    # First block bound 1/sqrt(10), last blocks bound 1/sqrt(5).
    w1 = p1.values[:50]
    assert np.max(np.abs(w1)) <= 1.0 / math.sqrt(10)
    tail = p1.values[55:]
    assert np.max(np.abs(tail)) <= 1.0 / math.sqrt(5)


def test_adam_zero_gradient_noop_from_fresh_state():
    spec = ModelSpec(kind="linear", in_dim=2, out_dim=1)
    params = init_params(spec, np.random.default_rng(2))
    before = params.values.copy()
    adam_step(params, np.zeros_like(before), lr=0.1)
    np.testing.assert_array_equal(params.values, before)
    assert params.step == 1


def test_adam_first_step_is_signed_lr():
    spec = ModelSpec(kind="linear", in_dim=2, out_dim=1)
    params = params_from_values(spec, [1.0, 1.0, 1.0])
    grad = np.array([0.5, -2.0, 0.0])
    adam_step(params, grad, lr=0.01)
    # Bias-corrected first step moves by ~lr * sign(grad).
    np.testing.assert_allclose(
        params.values, [1.0 - 0.01, 1.0 + 0.01, 1.0], atol=1e-7
    )


def test_adam_rejects_bad_gradient():
    spec = ModelSpec(kind="linear", in_dim=2, out_dim=1)
    params = init_params(spec, np.random.default_rng(3))
    with pytest.raises(ValueError, match="shape"):
        adam_step(params, np.zeros(5), lr=0.1)
    with pytest.raises(ValueError, match="finite"):
        adam_step(params, np.array([np.nan, 0.0, 0.0]), lr=0.1)


def test_adam_deterministic_trajectory():
    spec = ModelSpec(kind="linear", in_dim=3, out_dim=1)
    runs = []
    for _ in range(2):
        params = init_params(spec, np.random.default_rng(4))
        g_rng = np.random.default_rng(9)
        for _ in range(10):
            adam_step(params, g_rng.normal(size=4), lr=0.05)
        runs.append(params.values.copy())
    np.testing.assert_array_equal(runs[0], runs[1])


def test_schedule_interpolation():
    sched = ScheduleSpec(start=1e-3, end=5e-4, horizon=401)
    assert sched.at(0) == 1e-3
    assert sched.at(200) == pytest.approx(7.5e-4, abs=1e-18)
    assert sched.at(400) == 5e-4
    assert sched.at(1000) == 5e-4  # clamped past the horizon
    assert constant_schedule(0.2).at(57) == 0.2


def test_schedule_validation():
    with pytest.raises(ValueError, match="horizon"):
        ScheduleSpec(start=1.0, end=0.0, horizon=0)
    with pytest.raises(ValueError, match="t"):
        ScheduleSpec(start=1.0, end=0.0, horizon=5).at(-1)


def test_huber_values():
    value, grad = huber_loss(2.5, 2.0, delta=1.0)  # err = 0.5, quadratic zone
    assert value == 0.125 and grad == 0.5
    value, grad = huber_loss(4.0, 2.0, delta=1.0)  # err = 2, linear zone
    assert value == 1.5 and grad == 1.0
    value, grad = huber_loss(0.0, 2.0, delta=1.0)
    assert value == 1.5 and grad == -1.0


def test_huber_continuous_at_delta():
    for delta in (0.5, 1.0, 2.0):
        inside, _ = huber_loss(delta, 0.0, delta=delta)
        outside, _ = huber_loss(delta + 1e-12, 0.0, delta=delta)
        assert abs(inside - outside) < 1e-9
        assert inside == pytest.approx(0.5 * delta * delta)


def test_huber_validation():
    with pytest.raises(ValueError, match="delta"):
        huber_loss(1.0, 0.0, delta=0.0)
