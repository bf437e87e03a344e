"""Grid path planning with feature-driven costs and a compounding factor.

A robot on an 8-connected grid repeatedly travels to a target cell.
Each cell carries six features, drawn once per episode.  The first
three determine the cell's traversal cost through a hidden positive
linear model ``phi_c``; the last three determine a small cost-factor
delta through a hidden linear model ``phi_rho``.

Walking a path costs ``rho * sum(cost of path cells)`` (both endpoints
included) and multiplies the factor:

    rho' = rho * max(0.1, 1 + sum(delta of path cells)),

so routing through delta-negative cells makes all future travel cheaper
while delta-positive cells compound it.  After each leg the robot
stands on the old target and a new target is drawn uniformly among the
other cells.  Rewards are negative costs.

The hidden models are drawn once per dataset and shared by all its
episodes; features vary per episode.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..colayers import GridPathSpace, grid_path_argmax

N_FEATURES = 6
N_CRITIC_FEATURES = 8


@dataclass(frozen=True)
class GsppParams:
    """Dataset-level constants: grid size, horizon, hidden cost models."""

    phi_c: np.ndarray  # (3,) in [0.1, 1], hidden from agents
    phi_rho: np.ndarray  # (3,) small, hidden from agents
    rows: int = 20
    cols: int = 20
    episode_len: int = 100
    factor_floor: float = 0.1


@dataclass(frozen=True)
class GsppState:
    params: GsppParams
    features: np.ndarray  # (rows * cols, 6), row-major cells
    rho: float
    robot: tuple[int, int]
    target: tuple[int, int]
    t: int = 0

    @property
    def terminal(self) -> bool:
        return self.t >= self.params.episode_len


def gspp_hidden_models(
    rng: np.random.Generator, factor_scale: float = 0.005
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (phi_c, phi_rho): positive cost weights, small factor weights.

    ``factor_scale`` bounds the factor weights.  Larger values make
    deliberate routing through delta-negative cells pay off within
    fewer steps, which keeps the planning-vs-myopic tension visible on
    small grids and short horizons.
    """
    phi_c = rng.uniform(0.1, 1.0, size=3)
    phi_rho = rng.uniform(-factor_scale, factor_scale, size=3)
    return phi_c, phi_rho


def gspp_generate(rng: np.random.Generator, params: GsppParams) -> GsppState:
    """Fresh episode: features ~ U[0,1]^6 per cell, random robot and target."""
    n_cells = params.rows * params.cols
    if n_cells < 2:
        raise ValueError("grid needs at least two cells")
    features = rng.uniform(0.0, 1.0, size=(n_cells, N_FEATURES))
    robot = int(rng.integers(n_cells))
    target = int(rng.integers(n_cells - 1))
    if target >= robot:
        target += 1  # uniform over cells != robot
    return GsppState(
        params=params,
        features=features,
        rho=1.0,
        robot=divmod(robot, params.cols),
        target=divmod(target, params.cols),
        t=0,
    )


def gspp_costs(state: GsppState) -> np.ndarray:
    """Hidden per-cell traversal costs, strictly positive."""
    return state.features[:, :3] @ state.params.phi_c


def gspp_factor_deltas(state: GsppState) -> np.ndarray:
    """Hidden per-cell contributions to the cost-factor multiplier."""
    return state.features[:, 3:] @ state.params.phi_rho


def gspp_space(state: GsppState) -> GridPathSpace:
    return GridPathSpace(
        rows=state.params.rows,
        cols=state.params.cols,
        source=state.robot,
        dest=state.target,
    )


def gspp_observe(state: GsppState) -> np.ndarray:
    """Agent view: (cells, 7) rows of the six features plus relative time."""
    rel_t = state.t / state.params.episode_len
    return np.column_stack([
        state.features,
        np.full(state.features.shape[0], rel_t),
    ])


def gspp_critic_features(state: GsppState, action: np.ndarray) -> np.ndarray:
    """Per-cell critic inputs: [features, relative time, rho] on path cells.

    Rows of cells outside the path are all zero, so a per-cell value
    model scores exactly the traversed cells.
    """
    n_cells = state.features.shape[0]
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (n_cells,):
        raise ValueError(f"action has shape {action.shape}, expected ({n_cells},)")
    out = np.zeros((n_cells, N_CRITIC_FEATURES))
    on = action > 0.5
    rel_t = state.t / state.params.episode_len
    out[on, :6] = state.features[on]
    out[on, 6] = rel_t
    out[on, 7] = state.rho
    return out


def gspp_validate_action(state: GsppState, action: np.ndarray) -> np.ndarray:
    """Check an action encodes a connected robot->target cell set."""
    space = gspp_space(state)
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (space.dim,):
        raise ValueError(f"action has shape {action.shape}, expected ({space.dim},)")
    if not np.all(np.isin(action, (0.0, 1.0))):
        raise ValueError("action must be a 0/1 membership vector")
    on = set(np.flatnonzero(action > 0.5).tolist())
    src = space.cell_index(state.robot)
    dst = space.cell_index(state.target)
    if src not in on or dst not in on:
        raise ValueError("path must contain both the robot and the target cell")
    # Flood fill within the selected cells from the robot.
    seen = {src}
    frontier = [src]
    while frontier:
        u = frontier.pop()
        ur, uc = divmod(u, space.cols)
        for vr, vc in space.neighbors((ur, uc)):
            v = vr * space.cols + vc
            if v in on and v not in seen:
                seen.add(v)
                frontier.append(v)
    if dst not in seen:
        raise ValueError("path cells are not connected between robot and target")
    return action


def gspp_step(
    state: GsppState, action: np.ndarray, rng: np.random.Generator
) -> tuple[GsppState, float, bool]:
    """Walk the path, pay its cost, compound the factor, move the target."""
    if state.terminal:
        raise ValueError("episode already terminal")
    action = gspp_validate_action(state, action)
    on = action > 0.5
    reward = -state.rho * float(gspp_costs(state)[on].sum())
    mult = max(state.params.factor_floor, 1.0 + float(gspp_factor_deltas(state)[on].sum()))
    robot = state.target
    n_cells = state.features.shape[0]
    robot_idx = state.params.cols * robot[0] + robot[1]
    target = int(rng.integers(n_cells - 1))
    if target >= robot_idx:
        target += 1
    next_state = replace(
        state,
        rho=state.rho * mult,
        robot=robot,
        target=divmod(target, state.params.cols),
        t=state.t + 1,
    )
    return next_state, reward, next_state.terminal


def gspp_expert(state: GsppState) -> np.ndarray:
    """Cheapest path for the current step under the true costs.

    Myopic: ignores the factor dynamics, so a policy that routes
    through factor-lowering cells can beat it over a long horizon.
    """
    return grid_path_argmax(-gspp_costs(state), gspp_space(state))


def gspp_greedy(state: GsppState) -> np.ndarray:
    """Straight-line walk: diagonal while both coordinates differ, then axis."""
    space = gspp_space(state)
    r, c = state.robot
    tr, tc = state.target
    cells = [(r, c)]
    while (r, c) != (tr, tc):
        r += (tr > r) - (tr < r)
        c += (tc > c) - (tc < c)
        cells.append((r, c))
    action = np.zeros(space.dim)
    for cell in cells:
        action[space.cell_index(cell)] = 1.0
    return action
