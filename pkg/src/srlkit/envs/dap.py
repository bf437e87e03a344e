"""Dynamic assortment pricing with a hidden multinomial-logit customer.

At every step the agent shows ``k_select`` of ``n_items`` products.  A
hidden linear utility ``Theta_i = <[features_i, price_i], phi>`` drives
one multinomial-logit draw over the shown items plus a no-purchase
option; the reward is the purchased item's price (zero on no purchase).

Purchases feed back into the features:

* hype: feature 3 of the purchased item jumps by ``hype`` and returns to
  its previous level in ``hype_steps`` equal decrements over the next
  ``hype_steps`` steps (repeat purchases stack as independent entries),
* satisfaction: feature 4 of the purchased item permanently gains
  ``satisfaction``.

The hidden ``phi`` is drawn once per dataset and shared by every
episode in it, so baselines stay comparable across training seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import combinations

import numpy as np

N_BASE_FEATURES = 4
N_OBS_FEATURES = 10


@dataclass(frozen=True)
class DapParams:
    """Dataset-level constants: sizes, dynamics magnitudes, hidden utility."""

    phi: np.ndarray  # (5,) weights on [features, price], hidden from agents
    n_items: int = 20
    k_select: int = 4
    episode_len: int = 80
    hype: float = 0.5
    satisfaction: float = 0.1
    hype_steps: int = 4


@dataclass(frozen=True)
class DapState:
    params: DapParams
    features: np.ndarray  # (n_items, 4), current
    prices: np.ndarray  # (n_items,)
    base_features: np.ndarray  # features at episode start
    prev_features: np.ndarray  # features one step ago
    hype_ledger: tuple[tuple[int, float, int], ...]  # (item, decrement, steps left)
    t: int = 0

    @property
    def terminal(self) -> bool:
        return self.t >= self.params.episode_len


def dap_hidden_phi(rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=5)


def dap_generate(rng: np.random.Generator, params: DapParams) -> DapState:
    """Fresh episode: features ~ U[0,1]^4 per item, prices ~ U[1,10]."""
    features = rng.uniform(0.0, 1.0, size=(params.n_items, N_BASE_FEATURES))
    prices = rng.uniform(1.0, 10.0, size=params.n_items)
    return DapState(
        params=params,
        features=features,
        prices=prices,
        base_features=features.copy(),
        prev_features=features.copy(),
        hype_ledger=(),
        t=0,
    )


def dap_true_utilities(state: DapState) -> np.ndarray:
    """Hidden per-item utilities Theta from the current features and prices."""
    v = np.column_stack([state.features, state.prices])
    return v @ state.params.phi


def dap_mnl_probs(utilities: np.ndarray) -> np.ndarray:
    """Multinomial-logit purchase probabilities for the shown items.

    Input: utilities of the shown items.  Output has one extra entry:
    probabilities of buying each shown item, then of buying nothing.
    The no-purchase option has utility zero.  The output sums to one.
    """
    utilities = np.asarray(utilities, dtype=np.float64)
    shift = max(utilities.max(initial=0.0), 0.0)
    e = np.exp(utilities - shift)
    e0 = np.exp(-shift)
    denom = e0 + e.sum()
    return np.append(e, e0) / denom


def _check_action(state: DapState, action: np.ndarray) -> np.ndarray:
    action = np.asarray(action, dtype=np.float64)
    n, k = state.params.n_items, state.params.k_select
    if action.shape != (n,):
        raise ValueError(f"action has shape {action.shape}, expected ({n},)")
    on = np.flatnonzero(action > 0.5)
    if not np.all(np.isin(action, (0.0, 1.0))) or on.shape[0] != k:
        raise ValueError(f"action must select exactly {k} of {n} items")
    return on


def dap_expected_revenue(state: DapState, action: np.ndarray) -> float:
    """True one-step expected revenue of an assortment (oracle view)."""
    shown = _check_action(state, action)
    probs = dap_mnl_probs(dap_true_utilities(state)[shown])
    return float(probs[:-1] @ state.prices[shown])


def dap_step(
    state: DapState, action: np.ndarray, rng: np.random.Generator
) -> tuple[DapState, float, bool]:
    """Show an assortment, sample one purchase, advance the dynamics."""
    if state.terminal:
        raise ValueError("episode already terminal")
    shown = _check_action(state, action)
    probs = dap_mnl_probs(dap_true_utilities(state)[shown])
    choice = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    choice = min(choice, len(shown))  # guard against cumsum rounding
    purchased = int(shown[choice]) if choice < len(shown) else None
    reward = float(state.prices[purchased]) if purchased is not None else 0.0

    features = state.features.copy()
    ledger = []
    for item, dec, left in state.hype_ledger:
        features[item, 2] -= dec
        if left > 1:
            ledger.append((item, dec, left - 1))
    if purchased is not None:
        p = state.params
        features[purchased, 2] += p.hype
        ledger.append((purchased, p.hype / p.hype_steps, p.hype_steps))
        features[purchased, 3] += p.satisfaction
    next_state = replace(
        state,
        features=features,
        prev_features=state.features,
        hype_ledger=tuple(ledger),
        t=state.t + 1,
    )
    return next_state, reward, next_state.terminal


def dap_observe(state: DapState) -> np.ndarray:
    """Agent view: (n_items, 10) rows.

    Columns: the four features, price / 10, relative time, one-step
    deltas of features 3 and 4, and since-start deltas of features 3
    and 4.  The deltas expose the endogenous dynamics without leaking
    the hidden utility weights.
    """
    p = state.params
    rel_t = state.t / p.episode_len
    return np.column_stack([
        state.features,
        state.prices / 10.0,
        np.full(p.n_items, rel_t),
        state.features[:, 2] - state.prev_features[:, 2],
        state.features[:, 3] - state.prev_features[:, 3],
        state.features[:, 2] - state.base_features[:, 2],
        state.features[:, 3] - state.base_features[:, 3],
    ])


@lru_cache(maxsize=4)
def _assortment_index(n: int, k: int) -> np.ndarray:
    return np.array(list(combinations(range(n), k)), dtype=np.int64)


def dap_expert(state: DapState) -> np.ndarray:
    """Best assortment by exhaustive search under the true utilities.

    Myopic: maximizes the current step's expected revenue.  Ties go to
    the lexicographically smallest item set.
    """
    p = state.params
    combos = _assortment_index(p.n_items, p.k_select)
    e = np.exp(dap_true_utilities(state))
    shown_e = e[combos]
    revenue = (state.prices[combos] * shown_e).sum(axis=1) / (1.0 + shown_e.sum(axis=1))
    best = combos[int(np.argmax(revenue))]
    action = np.zeros(p.n_items)
    action[best] = 1.0
    return action


def dap_greedy(state: DapState) -> np.ndarray:
    """Show the k highest-priced items (ties to the lowest index)."""
    p = state.params
    order = np.argsort(-state.prices, kind="stable")
    action = np.zeros(p.n_items)
    action[order[: p.k_select]] = 1.0
    return action
