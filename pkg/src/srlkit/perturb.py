"""Gaussian perturbation machinery for score-and-optimize actors.

An actor produces a score vector ``theta``; an exact layer maps scores
to the best structured action.  Training such an actor end to end uses
three ingredients implemented here:

* ``gaussian_perturb`` draws perturbed score copies ``theta + sigma Z``,
* ``softmax_target`` condenses scored candidate actions into one target
  vector (a convex combination of the candidates),
* ``fy_loss_and_grad`` evaluates the perturbed Fenchel-Young loss

      L(theta; target) = E_Z[ max_a <theta + eps Z, a> ] - <theta, target>

  by Monte Carlo, together with its pathwise gradient
  ``mean_k argmax(theta + eps Z_k) - target``.

The loss value and its gradient always reuse the same noise draws
(common random numbers), so the reported gradient is exactly the
derivative of the reported value wherever the argmax selections are
locally constant.  That makes the gradient finite-difference checkable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ArgmaxFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FYLossResult:
    """Monte Carlo loss value and its pathwise gradient."""

    value: float
    grad: np.ndarray


def _check_vector(name: str, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def gaussian_perturb(
    theta: np.ndarray, sigma: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` rows of ``theta + sigma * Z`` with i.i.d. standard normal Z.

    ``sigma = 0`` returns exact copies of ``theta`` and still consumes
    ``count * len(theta)`` draws from ``rng`` so that downstream streams
    do not depend on the sigma value.
    """
    theta = _check_vector("theta", theta)
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    noise = rng.standard_normal((count, theta.shape[0]))
    return theta[None, :] + sigma * noise


def softmax_target(
    candidates: np.ndarray, q_values: np.ndarray, tau: float
) -> np.ndarray:
    """Softmax-weighted convex combination of candidate action vectors.

    ``target = sum_k w_k a_k`` with ``w_k = exp(q_k / tau) / sum_j exp(q_j / tau)``.
    Duplicate candidates contribute additively, which is equivalent to
    weighting each distinct action by its multiplicity.  Small ``tau``
    concentrates the target on the best-scored candidate; large ``tau``
    approaches the uniform average.
    """
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.ndim != 2 or candidates.shape[0] < 1:
        raise ValueError(
            f"candidates must be a non-empty (m, d) matrix, got shape {candidates.shape}"
        )
    q_values = _check_vector("q_values", q_values)
    if q_values.shape[0] != candidates.shape[0]:
        raise ValueError(
            f"got {candidates.shape[0]} candidates but {q_values.shape[0]} q-values"
        )
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    logits = (q_values - q_values.max()) / tau
    weights = np.exp(logits)
    weights /= weights.sum()
    return weights @ candidates


def perturbed_candidates(
    theta: np.ndarray,
    argmax_fn: ArgmaxFn,
    sigma: float,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Map ``count`` perturbed score copies through the exact layer.

    Returns the (count, action_dim) matrix of candidate actions, in the
    order the perturbations were drawn (duplicates preserved).
    """
    etas = gaussian_perturb(theta, sigma, count, rng)
    return np.array([argmax_fn(eta) for eta in etas], dtype=np.float64)


def smoothed_max_estimate(
    theta: np.ndarray,
    argmax_fn: ArgmaxFn,
    eps: float,
    count: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo estimate of ``E_Z[ max_a <theta + eps Z, a> ]``.

    With ``eps = 0`` this returns the exact maximizer objective at
    ``theta`` without consuming random draws.
    """
    theta = _check_vector("theta", theta)
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if eps == 0.0:
        return float(theta @ argmax_fn(theta))
    etas = gaussian_perturb(theta, eps, count, rng)
    total = 0.0
    for eta in etas:
        total += float(eta @ argmax_fn(eta))
    return total / count


def fy_loss_and_grad(
    theta: np.ndarray,
    target: np.ndarray,
    argmax_fn: ArgmaxFn,
    eps: float,
    count: int,
    rng: np.random.Generator,
) -> FYLossResult:
    """Perturbed Fenchel-Young loss of ``theta`` against a target action.

    Value: ``mean_k <theta + eps Z_k, a_k> - <theta, target>`` with
    ``a_k = argmax_fn(theta + eps Z_k)``.
    Gradient: ``mean_k a_k - target`` using the same draws ``Z_k``.

    With ``eps = 0`` the value reduces to the exact Fenchel-Young gap
    ``max_a <theta, a> - <theta, target>``, which is non-negative
    whenever ``target`` lies in the convex hull of the action set.
    """
    theta = _check_vector("theta", theta)
    target = _check_vector("target", target)
    if target.shape != theta.shape:
        raise ValueError(
            f"target has shape {target.shape}, expected {theta.shape}"
        )
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")

    if eps == 0.0:
        best = np.asarray(argmax_fn(theta), dtype=np.float64)
        value = float(theta @ best - theta @ target)
        return FYLossResult(value=value, grad=best - target)

    etas = gaussian_perturb(theta, eps, count, rng)
    mean_vertex = np.zeros_like(theta)
    value = 0.0
    for eta in etas:
        vertex = np.asarray(argmax_fn(eta), dtype=np.float64)
        value += float(eta @ vertex)
        mean_vertex += vertex
    mean_vertex /= count
    value = value / count - float(theta @ target)
    return FYLossResult(value=value, grad=mean_vertex - target)
