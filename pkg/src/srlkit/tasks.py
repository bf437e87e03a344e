"""Bindings from environments to the shared actor-critic machinery.

A task owns everything an algorithm needs to run on one environment:
dataset generation, the actor's feature view and score model shape,
the exact layer over the environment's action set, critic construction
and the environment-appropriate critic training rule, plus expert and
greedy reference policies.

Dynamic-environment instances are stored as seed pairs: ``gen_seed``
rebuilds the episode's initial state, ``dyn_seed`` drives the
environment randomness during evaluation rollouts so that every policy
faces the same draws on the same instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import ExactCritic, ScoreActor, Transition, ValueCritics
from .colayers import RankingSpace, TopKSpace, grid_path_argmax, ranking_argmax, topk_argmax
from .envs import dap, gspp, smsp
from .models import ModelSpec

SPLIT_CODES = {"train": 0, "val": 1, "test": 2}


@dataclass(frozen=True)
class SeededInstance:
    """One dynamic-environment episode: rebuildable from two seeds."""

    gen_seed: int
    dyn_seed: int


def _instance_seeds(data_seed: int, split: str, index: int) -> tuple[int, int]:
    ss = np.random.SeedSequence([int(data_seed), SPLIT_CODES[split], int(index)])
    a, b = ss.generate_state(2)
    return int(a), int(b)


class SmspTask:
    """Static scheduling: one ranking decision per instance.

    The critic is the exact environment objective, so there is nothing
    to train on the critic side.
    """

    name = "smsp"
    is_static = True

    def __init__(self, n_jobs: int = 8):
        self.n_jobs = n_jobs
        self.space = RankingSpace(n=n_jobs)
        self.actor_spec = ModelSpec(kind="linear", in_dim=smsp.N_FEATURES, out_dim=1)

    def generate_instances(self, count: int, split: str, data_seed: int) -> list:
        out = []
        for i in range(count):
            gen_seed, _ = _instance_seeds(data_seed, split, i)
            out.append(smsp.smsp_generate(self.n_jobs, np.random.default_rng(gen_seed)))
        return out

    def initial_state(self, instance):
        return instance

    def rollout_rng(self, instance) -> np.random.Generator:
        return np.random.default_rng(0)  # static: no environment randomness

    def observe(self, state) -> np.ndarray:
        return smsp.smsp_observe(state)

    def layer(self, theta: np.ndarray, state) -> np.ndarray:
        return ranking_argmax(theta, self.space)

    def step(self, state, action, rng):
        sequence = smsp.ranks_to_sequence(action)
        return None, -smsp.total_completion(state, sequence), True

    def expert(self, state) -> np.ndarray:
        return smsp.sequence_to_ranks(smsp.smsp_expert(state))

    def greedy(self, state) -> np.ndarray:
        return smsp.sequence_to_ranks(smsp.smsp_greedy(state))

    def make_critics(self, rng: np.random.Generator, for_ppo: bool = False):
        return ExactCritic(
            lambda state, action: -smsp.total_completion(
                state, smsp.ranks_to_sequence(action)
            )
        )

    def critic_update(self, critics, **kwargs) -> float:
        return 0.0


class DapTask:
    """Dynamic assortment: pick item subsets against a hidden customer.

    Two critic heads add up to the Q-value: the first regresses the
    immediate realized reward from replayed transitions, the second the
    discounted future return from the freshest episode.  The
    proximal-policy baseline uses only the first head.
    """

    name = "dap"
    is_static = False

    def __init__(self, params: dap.DapParams):
        self.params = params
        self.space = TopKSpace(n=params.n_items, k=params.k_select)
        self.actor_spec = ModelSpec(
            kind="mlp2", in_dim=dap.N_OBS_FEATURES, out_dim=1, hidden_dim=5
        )

    @classmethod
    def from_data_seed(cls, data_seed: int, **overrides) -> "DapTask":
        phi_rng = np.random.default_rng(
            np.random.SeedSequence([int(data_seed), 9001]).generate_state(1)[0]
        )
        return cls(dap.DapParams(phi=dap.dap_hidden_phi(phi_rng), **overrides))

    def generate_instances(self, count: int, split: str, data_seed: int) -> list:
        return [
            SeededInstance(*_instance_seeds(data_seed, split, i)) for i in range(count)
        ]

    def initial_state(self, instance: SeededInstance):
        return dap.dap_generate(np.random.default_rng(instance.gen_seed), self.params)

    def rollout_rng(self, instance: SeededInstance) -> np.random.Generator:
        return np.random.default_rng(instance.dyn_seed)

    def observe(self, state) -> np.ndarray:
        return dap.dap_observe(state)

    def layer(self, theta: np.ndarray, state) -> np.ndarray:
        return topk_argmax(theta, self.space)

    def step(self, state, action, rng):
        return dap.dap_step(state, action, rng)

    def expert(self, state) -> np.ndarray:
        return dap.dap_expert(state)

    def greedy(self, state) -> np.ndarray:
        return dap.dap_greedy(state)

    def _reward_head_features(self, state, action) -> np.ndarray:
        shown = np.flatnonzero(np.asarray(action) > 0.5)
        rel_t = state.t / state.params.episode_len
        parts = []
        for i in shown:
            parts.extend(state.features[i])
            parts.append(state.prices[i] / 10.0)
            parts.append(rel_t)
        return np.array(parts)[None, :]

    def _return_head_features(self, state, action) -> np.ndarray:
        obs = dap.dap_observe(state)
        rows = np.column_stack([obs, np.asarray(action, dtype=np.float64)])
        return rows.reshape(1, -1)

    def make_critics(self, rng: np.random.Generator, for_ppo: bool = False):
        k = self.params.k_select
        reward_head = (
            self._reward_head_features,
            ModelSpec(kind="mlp2", in_dim=6 * k, out_dim=1, hidden_dim=12),
        )
        return_head = (
            self._return_head_features,
            ModelSpec(
                kind="mlp2",
                in_dim=(dap.N_OBS_FEATURES + 1) * self.params.n_items,
                out_dim=1,
                hidden_dim=10,
            ),
        )
        heads = [reward_head] if for_ppo else [reward_head, return_head]
        return ValueCritics(heads, rng, combine="sum")

    def critic_update(
        self, critics, *, replay, last_episode, batch_size, gamma, lr, rng, next_action_fn
    ) -> float:
        batch = replay.sample(min(batch_size, len(replay)), rng)
        loss = critics.regress(0, [(t.state, t.action, t.reward) for t in batch], lr)
        if len(critics.heads) > 1 and last_episode:
            transitions, returns = last_episode
            idx = rng.choice(len(transitions), size=min(batch_size, len(transitions)), replace=False)
            items = [
                (transitions[i].state, transitions[i].action, returns[i]) for i in idx
            ]
            loss += critics.regress(1, items, lr)
        return loss


class GsppTask:
    """Dynamic grid routing with a compounding cost factor.

    Two per-cell value heads are averaged (double estimation) and
    trained by temporal difference with hard target copies.  Scores are
    projected to the non-positive cone before the shortest-path layer,
    which keeps the layer total under Gaussian perturbations.
    """

    name = "gspp"
    is_static = False

    def __init__(self, params: gspp.GsppParams):
        self.params = params
        self.actor_spec = ModelSpec(
            kind="linear",
            in_dim=gspp.N_FEATURES + 1,
            out_dim=1,
            activation="negative_absolute",
        )

    @classmethod
    def from_data_seed(
        cls, data_seed: int, factor_scale: float = 0.005, **overrides
    ) -> "GsppTask":
        phi_rng = np.random.default_rng(
            np.random.SeedSequence([int(data_seed), 9002]).generate_state(1)[0]
        )
        phi_c, phi_rho = gspp.gspp_hidden_models(phi_rng, factor_scale=factor_scale)
        return cls(gspp.GsppParams(phi_c=phi_c, phi_rho=phi_rho, **overrides))

    def generate_instances(self, count: int, split: str, data_seed: int) -> list:
        return [
            SeededInstance(*_instance_seeds(data_seed, split, i)) for i in range(count)
        ]

    def initial_state(self, instance: SeededInstance):
        return gspp.gspp_generate(np.random.default_rng(instance.gen_seed), self.params)

    def rollout_rng(self, instance: SeededInstance) -> np.random.Generator:
        return np.random.default_rng(instance.dyn_seed)

    def observe(self, state) -> np.ndarray:
        return gspp.gspp_observe(state)

    def layer(self, theta: np.ndarray, state) -> np.ndarray:
        return grid_path_argmax(np.minimum(theta, 0.0), gspp.gspp_space(state))

    def step(self, state, action, rng):
        return gspp.gspp_step(state, action, rng)

    def expert(self, state) -> np.ndarray:
        return gspp.gspp_expert(state)

    def greedy(self, state) -> np.ndarray:
        return gspp.gspp_greedy(state)

    def make_critics(self, rng: np.random.Generator, for_ppo: bool = False):
        spec = ModelSpec(kind="linear", in_dim=gspp.N_CRITIC_FEATURES, out_dim=1)
        heads = [(gspp.gspp_critic_features, spec), (gspp.gspp_critic_features, spec)]
        return ValueCritics(heads, rng, combine="mean")

    def critic_update(
        self, critics, *, replay, last_episode, batch_size, gamma, lr, rng, next_action_fn
    ) -> float:
        batch = replay.sample(min(batch_size, len(replay)), rng)
        return critics.td_update(batch, gamma, next_action_fn, lr)


def build_task(environment: str, data_seed: int, env_params: dict):
    """Construct the named task with dataset-level hidden models."""
    if environment == "smsp":
        return SmspTask(n_jobs=env_params.get("n_jobs", 8))
    if environment == "dap":
        keys = ("n_items", "k_select", "episode_len", "hype", "satisfaction")
        kw = {k: env_params[k] for k in keys if k in env_params}
        return DapTask.from_data_seed(data_seed, **kw)
    if environment == "gspp":
        keys = ("rows", "cols", "episode_len", "factor_scale")
        kw = {k: env_params[k] for k in keys if k in env_params}
        return GsppTask.from_data_seed(data_seed, **kw)
    raise ValueError(f"unknown environment {environment!r}")


def collect_episode(
    task,
    actor: ScoreActor,
    params,
    instance,
    sigma_f: float,
    dyn_rng: np.random.Generator,
    noise_rng: np.random.Generator,
    record_policy: bool = False,
) -> tuple[float, list[Transition]]:
    """Roll one episode with exploratory scores, recording transitions.

    ``record_policy`` additionally stores the score context each
    transition (old policy mean, sampled scores, deterministic action)
    for ratio-based updates.
    """
    state = task.initial_state(instance)
    transitions: list[Transition] = []
    total = 0.0
    terminal = False
    while not terminal:
        action, theta, eta = actor.explore(params, state, sigma_f, noise_rng)
        next_state, reward, terminal = task.step(state, action, dyn_rng)
        t = Transition(
            state=state,
            action=action,
            reward=reward,
            next_state=None if terminal else next_state,
            terminal=terminal,
            sigma_f=sigma_f,
        )
        if record_policy:
            t.theta = theta
            t.eta = eta
            t.det_action = task.layer(theta, state) if sigma_f > 0 else action
        transitions.append(t)
        total += reward
        state = next_state
    return total, transitions


def evaluate_rollout(task, policy_fn, instance) -> float:
    """Total reward of a deterministic policy on one instance."""
    state = task.initial_state(instance)
    dyn_rng = task.rollout_rng(instance)
    total = 0.0
    terminal = False
    while not terminal:
        action = policy_fn(state)
        state, reward, terminal = task.step(state, action, dyn_rng)
        total += reward
    return total


def discounted_future_returns(rewards: list[float], gamma: float) -> np.ndarray:
    """ret_t = sum_{k > t} gamma^(k - t) r_k, so the last entry is zero."""
    ret = np.zeros(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 2, -1, -1):
        acc = gamma * (rewards[t + 1] + acc)
        ret[t] = acc
    return ret
