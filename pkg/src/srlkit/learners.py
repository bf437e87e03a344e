"""Estimator-style learners: critic-guided training, imitation, and PPO.

All learners follow the scikit-learn conventions: hyperparameters are
plain constructor arguments recoverable through ``get_params``, fitted
state lives in trailing-underscore attributes, and ``fit`` returns
``self``.  The training data is a task object plus instance lists.

Fitting alternates training episodes with deterministic evaluation
probes; the parameter vector scoring best on the validation split (or
the training split when no validation split is given) is restored at
the end of ``fit``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .agents import (
    ReplayBuffer,
    ScoreActor,
    Transition,
    imitation_update,
    ppo_update,
    srl_actor_update,
)
from .models import ScheduleSpec
from .tasks import collect_episode, discounted_future_returns, evaluate_rollout


def as_schedule(value, episodes: int) -> ScheduleSpec:
    """Turn a float or a (start, end) pair into a per-episode schedule."""
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError(f"schedule pair must have 2 entries, got {value!r}")
        return ScheduleSpec(float(value[0]), float(value[1]), max(int(episodes), 1))
    return ScheduleSpec(float(value), float(value), 1)


class _EpisodeLearner(BaseEstimator):
    """Shared fit loop: episodes, evaluation probes, best-param restore."""

    def fit(self, task, train, val=None):
        if not train:
            raise ValueError("need at least one training instance")
        self.task_ = task
        self._train = list(train)
        self._val = list(val) if val else []
        ss = np.random.SeedSequence(int(self.seed))
        init_ss, collect_ss, update_ss = ss.spawn(3)
        init_rng = np.random.default_rng(init_ss)
        self._collect_rng = np.random.default_rng(collect_ss)
        self._update_rng = np.random.default_rng(update_ss)
        self.actor_ = ScoreActor(
            spec=task.actor_spec, observe_fn=task.observe, layer_fn=task.layer
        )
        self.params_ = self.actor_.init(init_rng)
        self._setup(init_rng)
        self.history_ = []
        self.best_episode_ = 0
        self.best_score_ = -np.inf
        best_params = self.params_.copy()
        for ep in range(int(self.episodes) + 1):
            if ep > 0:
                self._train_episode(ep)
            if ep % int(self.eval_every) == 0 or ep == int(self.episodes):
                record = self._evaluate(ep)
                if record["select"] > self.best_score_:
                    self.best_score_ = record["select"]
                    self.best_episode_ = ep
                    best_params = self.params_.copy()
        self.params_ = best_params
        return self

    def _setup(self, init_rng: np.random.Generator) -> None:
        pass

    def _evaluate(self, episode: int) -> dict:
        limit = int(self.eval_probe)
        train_mean = self.score(self._train[: limit or None])
        val_mean = self.score(self._val[: limit or None]) if self._val else None
        record = {
            "episode": episode,
            "train_mean": train_mean,
            "val_mean": val_mean,
            "select": train_mean if val_mean is None else val_mean,
        }
        self.history_.append(record)
        return record

    def predict(self, state) -> np.ndarray:
        """Deterministic action of the current policy in one state."""
        return self.actor_.action(self.params_, state)

    def score(self, instances) -> float:
        """Mean episode reward of the deterministic policy."""
        totals = [evaluate_rollout(self.task_, self.predict, inst) for inst in instances]
        return float(np.mean(totals))


class SRLLearner(_EpisodeLearner):
    """Actor-critic training through an exact combinatorial layer.

    Each actor update perturbs the scores ``m_candidates`` times,
    decodes every copy, ranks the candidate actions with the critic,
    and regresses the scores toward the softmax-weighted candidate
    combination with a perturbed Fenchel-Young loss.
    """

    def __init__(
        self,
        episodes: int = 200,
        iterations: int = 10,
        batch_size: int = 4,
        gamma: float = 0.99,
        lr_actor=1e-3,
        lr_critic=1e-3,
        sigma_f=0.25,
        sigma_b: float = 0.25,
        tau: float = 1.0,
        eps: float = 0.25,
        m_candidates: int = 16,
        fy_samples: int = 10,
        replay_capacity: int = 2000,
        warmup_episodes: int = 0,
        eval_every: int = 1,
        eval_probe: int = 0,
        seed: int = 0,
    ):
        self.episodes = episodes
        self.iterations = iterations
        self.batch_size = batch_size
        self.gamma = gamma
        self.lr_actor = lr_actor
        self.lr_critic = lr_critic
        self.sigma_f = sigma_f
        self.sigma_b = sigma_b
        self.tau = tau
        self.eps = eps
        self.m_candidates = m_candidates
        self.fy_samples = fy_samples
        self.replay_capacity = replay_capacity
        self.warmup_episodes = warmup_episodes
        self.eval_every = eval_every
        self.eval_probe = eval_probe
        self.seed = seed

    def _setup(self, init_rng: np.random.Generator) -> None:
        self.critics_ = self.task_.make_critics(init_rng)
        self._replay = ReplayBuffer(int(self.replay_capacity))
        self._last_episode = None
        self._lr_actor = as_schedule(self.lr_actor, self.episodes)
        self._lr_critic = as_schedule(self.lr_critic, self.episodes)
        self._sigma_f = as_schedule(self.sigma_f, self.episodes)
        self._sigma_b = as_schedule(self.sigma_b, self.episodes)
        self._tau = as_schedule(self.tau, self.episodes)

    def _actor_step(self, batch: list[Transition], ep: int, lr: float) -> None:
        srl_actor_update(
            self.actor_,
            self.params_,
            self.critics_,
            batch,
            m=int(self.m_candidates),
            sigma_b=self._sigma_b.at(ep - 1),
            tau=self._tau.at(ep - 1),
            eps=float(self.eps),
            fy_samples=int(self.fy_samples),
            lr=lr,
            rng=self._update_rng,
        )

    def _train_episode(self, ep: int) -> None:
        lr_a = self._lr_actor.at(ep - 1)
        lr_c = self._lr_critic.at(ep - 1)
        if self.task_.is_static:
            size = min(int(self.batch_size), len(self._train))
            for _ in range(int(self.iterations)):
                idx = self._update_rng.choice(len(self._train), size=size, replace=False)
                batch = [
                    Transition(
                        state=self._train[i],
                        action=None,
                        reward=0.0,
                        next_state=None,
                        terminal=True,
                    )
                    for i in idx
                ]
                self._actor_step(batch, ep, lr_a)
            return
        inst = self._train[(ep - 1) % len(self._train)]
        _, transitions = collect_episode(
            self.task_,
            self.actor_,
            self.params_,
            inst,
            self._sigma_f.at(ep - 1),
            dyn_rng=self._collect_rng,
            noise_rng=self._collect_rng,
        )
        for t in transitions:
            self._replay.push(t)
        returns = discounted_future_returns(
            [t.reward for t in transitions], float(self.gamma)
        )
        self._last_episode = (transitions, returns)
        for _ in range(int(self.iterations)):
            self.task_.critic_update(
                self.critics_,
                replay=self._replay,
                last_episode=self._last_episode,
                batch_size=int(self.batch_size),
                gamma=float(self.gamma),
                lr=lr_c,
                rng=self._update_rng,
                next_action_fn=self.predict,
            )
            if ep > int(self.warmup_episodes):
                batch = self._replay.sample(
                    min(int(self.batch_size), len(self._replay)), self._update_rng
                )
                self._actor_step(batch, ep, lr_a)
        self.critics_.sync_targets()


class SILLearner(_EpisodeLearner):
    """Supervised imitation of the expert through the same layer.

    Expert demonstrations are gathered once at the start of ``fit``:
    the optimal action per training instance on static tasks, full
    expert rollouts on dynamic ones.
    """

    def __init__(
        self,
        episodes: int = 200,
        iterations: int = 10,
        batch_size: int = 4,
        lr_actor=1e-3,
        eps: float = 0.25,
        fy_samples: int = 10,
        eval_every: int = 1,
        eval_probe: int = 0,
        seed: int = 0,
    ):
        self.episodes = episodes
        self.iterations = iterations
        self.batch_size = batch_size
        self.lr_actor = lr_actor
        self.eps = eps
        self.fy_samples = fy_samples
        self.eval_every = eval_every
        self.eval_probe = eval_probe
        self.seed = seed

    def _setup(self, init_rng: np.random.Generator) -> None:
        self._lr_actor = as_schedule(self.lr_actor, self.episodes)
        self._pairs = []
        for inst in self._train:
            if self.task_.is_static:
                state = self.task_.initial_state(inst)
                self._pairs.append((state, self.task_.expert(state)))
                continue
            state = self.task_.initial_state(inst)
            dyn_rng = self.task_.rollout_rng(inst)
            terminal = False
            while not terminal:
                action = self.task_.expert(state)
                self._pairs.append((state, action))
                state, _, terminal = self.task_.step(state, action, dyn_rng)

    def _train_episode(self, ep: int) -> None:
        lr_a = self._lr_actor.at(ep - 1)
        size = min(int(self.batch_size), len(self._pairs))
        for _ in range(int(self.iterations)):
            idx = self._update_rng.choice(len(self._pairs), size=size, replace=False)
            imitation_update(
                self.actor_,
                self.params_,
                [self._pairs[i] for i in idx],
                eps=float(self.eps),
                fy_samples=int(self.fy_samples),
                lr=lr_a,
                rng=self._update_rng,
            )


class PPOLearner(_EpisodeLearner):
    """Clipped-surrogate baseline over the score space.

    The stochastic policy samples perturbed scores and decodes them
    with the same layer as the structured learner; updates reweight
    fresh on-policy transitions by the Gaussian density ratio.
    """

    def __init__(
        self,
        episodes: int = 200,
        iterations: int = 10,
        batch_size: int = 4,
        gamma: float = 0.99,
        lr_actor=1e-3,
        lr_critic=1e-3,
        sigma_f=0.25,
        clip: float = 0.2,
        replay_capacity: int = 2000,
        warmup_episodes: int = 0,
        eval_every: int = 1,
        eval_probe: int = 0,
        seed: int = 0,
    ):
        self.episodes = episodes
        self.iterations = iterations
        self.batch_size = batch_size
        self.gamma = gamma
        self.lr_actor = lr_actor
        self.lr_critic = lr_critic
        self.sigma_f = sigma_f
        self.clip = clip
        self.replay_capacity = replay_capacity
        self.warmup_episodes = warmup_episodes
        self.eval_every = eval_every
        self.eval_probe = eval_probe
        self.seed = seed

    def _setup(self, init_rng: np.random.Generator) -> None:
        self.critics_ = self.task_.make_critics(init_rng, for_ppo=True)
        self._replay = ReplayBuffer(int(self.replay_capacity))
        self._last_episode = None
        self._lr_actor = as_schedule(self.lr_actor, self.episodes)
        self._lr_critic = as_schedule(self.lr_critic, self.episodes)
        self._sigma_f = as_schedule(self.sigma_f, self.episodes)

    def _train_episode(self, ep: int) -> None:
        lr_a = self._lr_actor.at(ep - 1)
        lr_c = self._lr_critic.at(ep - 1)
        sf = self._sigma_f.at(ep - 1)
        if self.task_.is_static:
            size = min(int(self.batch_size), len(self._train))
            idx = self._update_rng.choice(len(self._train), size=size, replace=False)
            buffer = []
            for i in idx:
                _, transitions = collect_episode(
                    self.task_,
                    self.actor_,
                    self.params_,
                    self._train[i],
                    sf,
                    dyn_rng=self._collect_rng,
                    noise_rng=self._collect_rng,
                    record_policy=True,
                )
                buffer.extend(transitions)
            for _ in range(int(self.iterations)):
                ppo_update(
                    self.actor_, self.params_, self.critics_, buffer,
                    clip=float(self.clip), lr=lr_a,
                )
            return
        inst = self._train[(ep - 1) % len(self._train)]
        _, transitions = collect_episode(
            self.task_,
            self.actor_,
            self.params_,
            inst,
            sf,
            dyn_rng=self._collect_rng,
            noise_rng=self._collect_rng,
            record_policy=True,
        )
        for t in transitions:
            self._replay.push(t)
        returns = discounted_future_returns(
            [t.reward for t in transitions], float(self.gamma)
        )
        self._last_episode = (transitions, returns)
        for _ in range(int(self.iterations)):
            self.task_.critic_update(
                self.critics_,
                replay=self._replay,
                last_episode=self._last_episode,
                batch_size=int(self.batch_size),
                gamma=float(self.gamma),
                lr=lr_c,
                rng=self._update_rng,
                next_action_fn=self.predict,
            )
            if ep > int(self.warmup_episodes):
                size = min(int(self.batch_size), len(transitions))
                idx = self._update_rng.choice(len(transitions), size=size, replace=False)
                ppo_update(
                    self.actor_,
                    self.params_,
                    self.critics_,
                    [transitions[i] for i in idx],
                    clip=float(self.clip),
                    lr=lr_a,
                )
        self.critics_.sync_targets()


class PolicyBaseline(_EpisodeLearner):
    """Fixed reference policy (greedy heuristic or environment expert).

    Fitting only records evaluation probes so baselines drop into the
    same reporting pipeline as the trained learners.
    """

    def __init__(self, policy: str = "greedy", eval_every: int = 1, eval_probe: int = 0):
        self.policy = policy
        self.eval_every = eval_every
        self.eval_probe = eval_probe

    episodes = 0
    seed = 0

    def fit(self, task, train, val=None):
        if self.policy not in ("greedy", "expert"):
            raise ValueError(f"unknown policy {self.policy!r}")
        self.task_ = task
        self._train = list(train)
        self._val = list(val) if val else []
        self.history_ = []
        self.best_episode_ = 0
        record = self._evaluate(0)
        self.best_score_ = record["select"]
        return self

    def predict(self, state) -> np.ndarray:
        if self.policy == "expert":
            return self.task_.expert(state)
        return self.task_.greedy(state)


LEARNERS = {"srl": SRLLearner, "sil": SILLearner, "ppo": PPOLearner}
BASELINES = ("greedy", "expert")
