"""Actor-critic machinery around exact combinatorial layers.

The actor is a per-element score model composed with an exact argmax
layer.  Training perturbs scores in three distinct places, each with
its own magnitude:

* ``sigma_f``: exploration noise on scores while collecting episodes,
* ``sigma_b``: candidate sampling noise inside the actor update, which
  proposes alternative actions whose critic values define the update
  target (a softmax-weighted convex combination of candidates),
* ``eps``: the perturbed-loss regularizer inside ``fy_loss_and_grad``.

Critics are small value models; ensembles combine one or two heads by
mean (double estimation) or sum (additive decomposition).  Static
tasks with a computable objective use an exact critic instead.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import (
    ModelSpec,
    ParamSet,
    adam_step,
    forward,
    forward_backward,
    huber_loss,
    init_params,
)
from .perturb import fy_loss_and_grad, gaussian_perturb, softmax_target


@dataclass
class Transition:
    """One step of experience, with optional policy context for reuse.

    ``theta``/``eta``/``det_action`` hold, respectively, the unperturbed
    scores, the perturbed scores that produced ``action``, and the
    action the deterministic policy would have taken.  They are filled
    during collection when an algorithm needs them later (ratios and
    advantage baselines); value-based updates may leave them None.
    """

    state: object
    action: np.ndarray
    reward: float
    next_state: object | None
    terminal: bool
    sigma_f: float = 0.0
    theta: np.ndarray | None = None
    eta: np.ndarray | None = None
    det_action: np.ndarray | None = None


class ReplayBuffer:
    """Bounded FIFO store with uniform sampling without replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def extend(self, transitions) -> None:
        for t in transitions:
            self.push(t)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        if batch_size > len(self._items):
            raise ValueError(
                f"cannot sample {batch_size} transitions from buffer of {len(self._items)}"
            )
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[int(i)] for i in idx]


class ScoreActor:
    """Score model plus exact layer: state -> scores -> structured action.

    ``observe_fn(state)`` returns per-element feature rows; the model
    maps each row to one score; ``layer_fn(scores, state)`` solves the
    exact argmax.  The layer must accept any real score vector (layers
    with a restricted domain are wrapped with a projection).
    """

    def __init__(
        self,
        spec: ModelSpec,
        observe_fn: Callable[[object], np.ndarray],
        layer_fn: Callable[[np.ndarray, object], np.ndarray],
    ):
        if spec.out_dim != 1:
            raise ValueError("score models emit one score per element")
        self.spec = spec
        self.observe_fn = observe_fn
        self.layer_fn = layer_fn

    def init(self, rng: np.random.Generator) -> ParamSet:
        return init_params(self.spec, rng)

    def scores(self, params: ParamSet, state) -> np.ndarray:
        return forward(self.spec, params, self.observe_fn(state))[:, 0]

    def action(self, params: ParamSet, state) -> np.ndarray:
        theta = self.scores(params, state)
        return self.layer_fn(theta, state)

    def explore(
        self, params: ParamSet, state, sigma_f: float, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sample one exploratory action; returns (action, theta, eta)."""
        theta = self.scores(params, state)
        eta = gaussian_perturb(theta, sigma_f, 1, rng)[0]
        return self.layer_fn(eta, state), theta, eta

    def grad_from_dscores(
        self, params: ParamSet, state, dscores: np.ndarray
    ) -> np.ndarray:
        """Chain d(loss)/d(scores) into a flat parameter gradient."""
        rows = self.observe_fn(state)
        _, grad = forward_backward(self.spec, params, rows, np.asarray(dscores)[:, None])
        return grad


class ExactCritic:
    """Black-box critic returning the true objective of (state, action).

    Used on static single-decision tasks where the environment cost is
    computable; it needs no training and has no target copies.
    """

    trainable = False

    def __init__(self, value_fn: Callable[[object, np.ndarray], float]):
        self.value_fn = value_fn

    def q_value(self, state, action) -> float:
        return float(self.value_fn(state, action))

    def q_values(self, state, actions) -> np.ndarray:
        return np.array([self.q_value(state, a) for a in actions])

    def sync_targets(self) -> None:
        pass


@dataclass
class CriticHead:
    """One value model: feature map, online parameters, target copy."""

    feature_fn: Callable[[object, np.ndarray], np.ndarray]
    spec: ModelSpec
    online: ParamSet
    target: ParamSet


class ValueCritics:
    """One or two trainable critic heads over (state, action) features.

    Each head evaluates its feature rows and sums the per-row outputs
    into one scalar.  ``combine`` controls how head values merge into
    the ensemble Q-value: ``"mean"`` for double estimation, ``"sum"``
    for additive deccompositions.  Each head bootstraps temporal
    difference targets from its own target copy.
    """

    trainable = True

    def __init__(
        self,
        heads: list[tuple[Callable, ModelSpec]],
        rng: np.random.Generator,
        combine: str = "mean",
        huber_delta: float = 1.0,
    ):
        if combine not in ("mean", "sum"):
            raise ValueError(f"combine must be 'mean' or 'sum', got {combine!r}")
        if not heads:
            raise ValueError("at least one critic head required")
        self.combine = combine
        self.huber_delta = huber_delta
        self.heads: list[CriticHead] = []
        for feature_fn, spec in heads:
            online = init_params(spec, rng)
            self.heads.append(
                CriticHead(feature_fn, spec, online=online, target=online.copy())
            )

    def head_value(self, idx: int, state, action, use_target: bool = False) -> float:
        head = self.heads[idx]
        params = head.target if use_target else head.online
        rows = head.feature_fn(state, action)
        return float(forward(head.spec, params, rows).sum())

    def q_value(self, state, action) -> float:
        vals = [self.head_value(i, state, action) for i in range(len(self.heads))]
        return float(np.mean(vals) if self.combine == "mean" else np.sum(vals))

    def q_values(self, state, actions) -> np.ndarray:
        return np.array([self.q_value(state, a) for a in actions])

    def sync_targets(self) -> None:
        """Hard copy of every online head into its target twin."""
        for head in self.heads:
            head.target = head.online.copy()

    def regress(self, idx: int, items: list[tuple[object, np.ndarray, float]], lr: float) -> float:
        """One Huber regression step of head ``idx`` on (state, action, target)."""
        head = self.heads[idx]
        grad = np.zeros_like(head.online.values)
        total = 0.0
        for state, action, target in items:
            rows = head.feature_fn(state, action)
            pred = float(forward(head.spec, head.online, rows).sum())
            value, dpred = huber_loss(pred, target, self.huber_delta)
            total += value
            _, g = forward_backward(
                head.spec, head.online, rows, np.full((rows.shape[0], 1), dpred)
            )
            grad += g
        grad /= len(items)
        adam_step(head.online, grad, lr)
        return total / len(items)

    def td_update(
        self,
        batch: list[Transition],
        gamma: float,
        next_action_fn: Callable[[object], np.ndarray],
        lr: float,
    ) -> float:
        """One temporal-difference step on every head.

        Targets are ``r`` on terminal transitions, otherwise
        ``r + gamma * Q_target(s', a')`` with ``a'`` recomputed
        deterministically by ``next_action_fn`` and each head reading
        its own target copy.
        """
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {gamma}")
        next_actions = [
            None if t.terminal else next_action_fn(t.next_state) for t in batch
        ]
        total = 0.0
        for idx, head in enumerate(self.heads):
            items = []
            for t, a_next in zip(batch, next_actions):
                y = t.reward
                if not t.terminal:
                    y += gamma * self.head_value(idx, t.next_state, a_next, use_target=True)
                items.append((t.state, t.action, y))
            total += self.regress(idx, items, lr)
        return total / len(self.heads)


def target_action(
    candidates: np.ndarray, q_values: np.ndarray, tau: float
) -> np.ndarray:
    """Softmax-combined target with a convex-hull sanity check."""
    target = softmax_target(candidates, q_values, tau)
    lo = candidates.min(axis=0) - 1e-9
    hi = candidates.max(axis=0) + 1e-9
    if np.any(target < lo) or np.any(target > hi):
        raise RuntimeError("target action left the candidate hull")
    return target


def srl_actor_update(
    actor: ScoreActor,
    params: ParamSet,
    critic,
    batch: list[Transition],
    *,
    m: int,
    sigma_b: float,
    tau: float,
    eps: float,
    fy_samples: int,
    lr: float,
    rng: np.random.Generator,
) -> dict:
    """One structured actor update on a batch of stored states.

    Per transition: perturb the scores ``m`` times with ``sigma_b``,
    map every copy through the layer, score the candidate actions with
    the critic, combine them into a softmax target, then take one Adam
    step on the perturbed Fenchel-Young loss toward that target.
    Noise draws are fresh per transition.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    grad = np.zeros_like(params.values)
    loss = 0.0
    for t in batch:
        theta = actor.scores(params, t.state)
        layer = lambda s: actor.layer_fn(s, t.state)
        etas = gaussian_perturb(theta, sigma_b, m, rng)
        candidates = np.array([layer(e) for e in etas])
        q = critic.q_values(t.state, candidates)
        target = target_action(candidates, q, tau)
        res = fy_loss_and_grad(theta, target, layer, eps, fy_samples, rng)
        loss += res.value
        grad += actor.grad_from_dscores(params, t.state, res.grad)
    grad /= len(batch)
    adam_step(params, grad, lr)
    return {"loss": loss / len(batch)}


def imitation_update(
    actor: ScoreActor,
    params: ParamSet,
    pairs: list[tuple[object, np.ndarray]],
    *,
    eps: float,
    fy_samples: int,
    lr: float,
    rng: np.random.Generator,
) -> dict:
    """One supervised update toward expert actions.

    Identical loss machinery to the reinforcement update, with the
    softmax target replaced by the expert's action.
    """
    grad = np.zeros_like(params.values)
    loss = 0.0
    for state, expert_action in pairs:
        theta = actor.scores(params, state)
        layer = lambda s: actor.layer_fn(s, state)
        res = fy_loss_and_grad(theta, np.asarray(expert_action, dtype=np.float64),
                               layer, eps, fy_samples, rng)
        loss += res.value
        grad += actor.grad_from_dscores(params, state, res.grad)
    grad /= len(pairs)
    adam_step(params, grad, lr)
    return {"loss": loss / len(pairs)}


def gaussian_log_density(x: np.ndarray, mean: np.ndarray, sigma: float) -> float:
    """Log density of an isotropic normal at ``x``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    if x.shape != mean.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {mean.shape}")
    d = x.shape[0]
    sq = float(np.sum((x - mean) ** 2))
    return -0.5 * d * math.log(2.0 * math.pi * sigma * sigma) - sq / (2.0 * sigma * sigma)


def ppo_update(
    actor: ScoreActor,
    params: ParamSet,
    critic,
    batch: list[Transition],
    *,
    clip: float,
    lr: float,
) -> dict:
    """One clipped-surrogate update treating perturbed scores as actions.

    The policy is the Gaussian ``N(scores, sigma)`` over score space;
    stored transitions carry the collection-time scores ``theta`` (old
    policy mean) and the sampled ``eta``.  ``sigma`` is the batch
    average of the collection noise levels.  The advantage compares the
    executed action's Q-value against the old deterministic action's.
    Clipped samples contribute no actor gradient.
    """
    if not 0.0 < clip < 1.0:
        raise ValueError(f"clip must be in (0, 1), got {clip}")
    for t in batch:
        if t.theta is None or t.eta is None or t.det_action is None:
            raise ValueError("PPO requires transitions collected with policy context")
    sigma = float(np.mean([t.sigma_f for t in batch]))
    if not sigma > 0:
        raise ValueError("PPO needs positive collection noise, got sigma = 0")
    grad = np.zeros_like(params.values)
    surrogate = 0.0
    clipped_count = 0
    for t in batch:
        theta_new = actor.scores(params, t.state)
        log_ratio = gaussian_log_density(t.eta, theta_new, sigma) - gaussian_log_density(
            t.eta, t.theta, sigma
        )
        # Clamp to keep exp finite; clipping decisions are unaffected
        # since the clip bounds sit many orders of magnitude below e^30.
        ratio = math.exp(min(max(log_ratio, -30.0), 30.0))
        advantage = critic.q_value(t.state, t.action) - critic.q_value(
            t.state, t.det_action
        )
        unclipped = ratio * advantage
        clipped = min(max(ratio, 1.0 - clip), 1.0 + clip) * advantage
        surrogate += min(unclipped, clipped)
        if unclipped <= clipped:
            # Gradient of ratio * A wrt the new scores; flip sign to ascend.
            dscores = -advantage * ratio * (t.eta - theta_new) / (sigma * sigma)
            grad += actor.grad_from_dscores(params, t.state, dscores)
        else:
            clipped_count += 1
    grad /= len(batch)
    adam_step(params, grad, lr)
    return {"surrogate": surrogate / len(batch), "clipped": clipped_count}
