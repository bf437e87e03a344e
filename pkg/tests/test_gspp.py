"""Gridworld environment: cost accounting, factor dynamics, path policies."""

import numpy as np
import pytest

from srlkit.colayers import enumerate_paths, path_to_action
from srlkit.envs.gspp import (
    GsppParams,
    GsppState,
    gspp_costs,
    gspp_critic_features,
    gspp_expert,
    gspp_factor_deltas,
    gspp_generate,
    gspp_greedy,
    gspp_hidden_models,
    gspp_observe,
    gspp_space,
    gspp_step,
    gspp_validate_action,
)


def make_params(rows=3, cols=3, episode_len=10, phi_c=None, phi_rho=None):
    return GsppParams(
        phi_c=np.asarray(phi_c if phi_c is not None else [0.5, 0.3, 0.2]),
        phi_rho=np.asarray(phi_rho if phi_rho is not None else [0.002, -0.003, 0.001]),
        rows=rows,
        cols=cols,
        episode_len=episode_len,
    )


def make_state(params, features, robot, target, rho=1.0, t=0):
    return GsppState(
        params=params,
        features=np.asarray(features, dtype=np.float64),
        rho=rho,
        robot=robot,
        target=target,
        t=t,
    )


def test_generate_shapes_and_ranges():
    rng = np.random.default_rng(60)
    phi_c, phi_rho = gspp_hidden_models(rng)
    assert np.all(phi_c >= 0.1) and np.all(phi_c <= 1.0)
    assert np.all(np.abs(phi_rho) <= 0.005)
    _, wide = gspp_hidden_models(np.random.default_rng(60), factor_scale=0.02)
    assert np.all(np.abs(wide) <= 0.02) and np.any(np.abs(wide) > 0.005)
    params = GsppParams(phi_c=phi_c, phi_rho=phi_rho, rows=5, cols=4, episode_len=7)
    state = gspp_generate(rng, params)
    assert state.features.shape == (20, 6)
    assert state.features.min() >= 0 and state.features.max() <= 1
    assert state.rho == 1.0 and state.t == 0
    assert state.robot != state.target
    assert np.all(gspp_costs(state) > 0)


def test_generate_deterministic():
    params = make_params(rows=4, cols=4)
    a = gspp_generate(np.random.default_rng(61), params)
    b = gspp_generate(np.random.default_rng(61), params)
    np.testing.assert_array_equal(a.features, b.features)
    assert a.robot == b.robot and a.target == b.target


def test_step_cost_and_factor_hand_case():
    params = make_params(rows=2, cols=2, phi_c=[1.0, 0.0, 0.0], phi_rho=[0.01, 0.0, 0.0])
    # Cell costs equal the first feature; deltas equal 0.01 * first factor feature.
    features = np.array([
        [0.2, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.4, 0.0, 0.0, 2.0, 0.0, 0.0],
        [0.6, 0.0, 0.0, 3.0, 0.0, 0.0],
        [0.8, 0.0, 0.0, 4.0, 0.0, 0.0],
    ])
    state = make_state(params, features, robot=(0, 0), target=(1, 1), rho=2.0)
    action = np.array([1.0, 0.0, 0.0, 1.0])
    nxt, reward, terminal = gspp_step(state, action, np.random.default_rng(0))
    # Both endpoints paid: reward = -rho * (0.2 + 0.8).
    assert reward == pytest.approx(-2.0)
    # Factor multiplies by 1 + (0.01 + 0.04).
    assert nxt.rho == pytest.approx(2.0 * 1.05)
    assert nxt.robot == (1, 1)
    assert nxt.target != nxt.robot
    assert nxt.t == 1 and not terminal


def test_factor_floor_clamps():
    params = make_params(rows=2, cols=2, phi_rho=[-1.0, 0.0, 0.0])
    features = np.ones((4, 6))
    state = make_state(params, features, robot=(0, 0), target=(1, 1))
    nxt, _, _ = gspp_step(state, np.array([1.0, 0.0, 0.0, 1.0]), np.random.default_rng(1))
    assert nxt.rho == pytest.approx(0.1)  # 1 + (-2) clamped to the floor


def test_step_rejects_invalid_paths():
    params = make_params(rows=2, cols=3)
    state = make_state(params, np.ones((6, 6)), robot=(0, 0), target=(1, 2))
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError, match="robot"):
        gspp_step(state, np.array([0.0, 1.0, 0.0, 0.0, 0.0, 1.0]), rng)
    with pytest.raises(ValueError, match="connected"):
        gspp_step(state, np.array([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]), rng)
    with pytest.raises(ValueError, match="0/1"):
        gspp_step(state, np.array([1.0, 0.5, 0.0, 0.0, 0.0, 1.0]), rng)


def test_validate_accepts_real_paths():
    params = make_params(rows=3, cols=3)
    state = make_state(params, np.ones((9, 6)), robot=(0, 0), target=(2, 2))
    action = np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0, 1.0])  # diagonal
    gspp_validate_action(state, action)


def test_expert_matches_path_enumeration_oracle():
    rng = np.random.default_rng(62)
    params = make_params(rows=3, cols=3)
    for _ in range(10):
        state = gspp_generate(rng, params)
        costs = gspp_costs(state)
        expert_cost = costs[gspp_expert(state) > 0.5].sum()
        space = gspp_space(state)
        oracle = min(
            costs[path_to_action(p, space) > 0.5].sum() for p in enumerate_paths(space)
        )
        assert expert_cost == pytest.approx(oracle, abs=1e-12)


def test_expert_never_worse_than_greedy_per_step():
    rng = np.random.default_rng(63)
    params = make_params(rows=5, cols=5)
    for _ in range(20):
        state = gspp_generate(rng, params)
        costs = gspp_costs(state)
        assert costs[gspp_expert(state) > 0.5].sum() <= costs[
            gspp_greedy(state) > 0.5
        ].sum() + 1e-12


def test_greedy_walks_diagonal_then_axis():
    params = make_params(rows=5, cols=5)
    state = make_state(params, np.ones((25, 6)), robot=(0, 0), target=(2, 4))
    action = gspp_greedy(state)
    expected = {(0, 0), (1, 1), (2, 2), (2, 3), (2, 4)}
    on = {divmod(int(i), 5) for i in np.flatnonzero(action > 0.5)}
    assert on == expected
    gspp_validate_action(state, action)


def test_observe_and_critic_features():
    params = make_params(rows=2, cols=2, episode_len=8)
    features = np.arange(24, dtype=np.float64).reshape(4, 6) / 24.0
    state = make_state(params, features, robot=(0, 0), target=(1, 1), rho=1.7, t=2)
    obs = gspp_observe(state)
    assert obs.shape == (4, 7)
    np.testing.assert_array_equal(obs[:, :6], features)
    np.testing.assert_array_equal(obs[:, 6], np.full(4, 0.25))

    action = np.array([1.0, 0.0, 0.0, 1.0])
    cf = gspp_critic_features(state, action)
    assert cf.shape == (4, 8)
    np.testing.assert_array_equal(cf[1], np.zeros(8))
    np.testing.assert_array_equal(cf[2], np.zeros(8))
    np.testing.assert_array_equal(cf[0, :6], features[0])
    assert cf[0, 6] == 0.25 and cf[0, 7] == 1.7
    assert cf[3, 7] == 1.7


def test_factor_compounds_across_steps():
    params = make_params(rows=2, cols=2, phi_rho=[0.05, 0.0, 0.0], episode_len=10)
    features = np.ones((4, 6))
    state = make_state(params, features, robot=(0, 0), target=(1, 1))
    rng = np.random.default_rng(64)
    state, _, _ = gspp_step(state, gspp_greedy(state), rng)
    rho_after_one = state.rho
    state, _, _ = gspp_step(state, gspp_greedy(state), rng)
    assert rho_after_one == pytest.approx(1.1)  # two cells, 0.05 each
    assert state.rho == pytest.approx(rho_after_one * 1.1)


def test_terminal_episode_refuses_steps():
    params = make_params(rows=2, cols=2, episode_len=1)
    state = make_state(params, np.ones((4, 6)), robot=(0, 0), target=(1, 1))
    state, _, terminal = gspp_step(state, gspp_greedy(state), np.random.default_rng(65))
    assert terminal
    with pytest.raises(ValueError, match="terminal"):
        gspp_step(state, gspp_greedy(state), np.random.default_rng(66))


def test_target_resample_uniform_excludes_robot():
    params = make_params(rows=3, cols=3, episode_len=10_000)
    state = make_state(params, np.ones((9, 6)), robot=(0, 0), target=(2, 2))
    rng = np.random.default_rng(67)
    counts = np.zeros(9)
    for _ in range(2000):
        nxt, _, _ = gspp_step(state, gspp_expert(state), rng)
        assert nxt.target != nxt.robot
        counts[nxt.target[0] * 3 + nxt.target[1]] += 1
        state = make_state(params, np.ones((9, 6)), robot=state.robot, target=state.target)
    # Old target was (2,2): the new target never lands on the new robot.
    assert counts[8] == 0
    occupied = counts[counts > 0]
    assert occupied.min() > 2000 / 8 * 0.7  # roughly uniform over the rest
