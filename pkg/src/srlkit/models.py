"""Minimal dense models with explicit backprop, Adam, schedules, Huber.

Two architectures cover every actor and critic in this package:

* ``linear``: ``y = x W^T + b``,
* ``mlp2``: one tanh hidden layer, ``y = tanh(x W1^T + b1) W2^T + b2``.

Either can be wrapped in a ``negative_absolute`` output activation
``y -> -|y|``, used when downstream layers require non-positive scores.
Parameters live in one flat float64 vector so snapshots, checkpoints
and Adam state stay trivial to copy bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("identity", "negative_absolute")
KINDS = ("linear", "mlp2")


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description: kind, dims, output activation."""

    kind: str
    in_dim: int
    out_dim: int = 1
    hidden_dim: int = 0
    activation: str = "identity"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {ACTIVATIONS}, got {self.activation!r}"
            )
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"dims must be >= 1, got {self.in_dim}->{self.out_dim}")
        if self.kind == "mlp2" and self.hidden_dim < 1:
            raise ValueError("mlp2 requires hidden_dim >= 1")

    @property
    def blocks(self) -> tuple[tuple[str, tuple[int, ...], int], ...]:
        """(name, shape, fan_in) for each parameter block, layout order."""
        if self.kind == "linear":
            return (
                ("W", (self.out_dim, self.in_dim), self.in_dim),
                ("b", (self.out_dim,), self.in_dim),
            )
        return (
            ("W1", (self.hidden_dim, self.in_dim), self.in_dim),
            ("b1", (self.hidden_dim,), self.in_dim),
            ("W2", (self.out_dim, self.hidden_dim), self.hidden_dim),
            ("b2", (self.out_dim,), self.hidden_dim),
        )

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(shape)) for _, shape, _ in self.blocks)


@dataclass
class ParamSet:
    """Flat parameter vector plus Adam moment estimates."""

    values: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    def copy(self) -> "ParamSet":
        return ParamSet(self.values.copy(), self.m.copy(), self.v.copy(), self.step)


def init_params(spec: ModelSpec, rng: np.random.Generator) -> ParamSet:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per block."""
    parts = []
    for _, shape, fan_in in spec.blocks:
        bound = 1.0 / np.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=int(np.prod(shape))))
    values = np.concatenate(parts)
    return ParamSet(values, np.zeros_like(values), np.zeros_like(values), 0)


def _views(spec: ModelSpec, flat: np.ndarray) -> dict[str, np.ndarray]:
    out = {}
    offset = 0
    for name, shape, _ in spec.blocks:
        size = int(np.prod(shape))
        out[name] = flat[offset : offset + size].reshape(shape)
        offset += size
    if offset != flat.shape[0]:
        raise ValueError(
            f"parameter vector has {flat.shape[0]} entries, spec needs {offset}"
        )
    return out


def _apply_activation(spec: ModelSpec, z: np.ndarray) -> np.ndarray:
    if spec.activation == "negative_absolute":
        return -np.abs(z)
    return z


def _activation_deriv(spec: ModelSpec, z: np.ndarray) -> np.ndarray:
    if spec.activation == "negative_absolute":
        # d(-|z|)/dz = -sign(z), with the subgradient sign(0) := +1.
        s = np.sign(z)
        s[s == 0] = 1.0
        return -s
    return np.ones_like(z)


def forward(spec: ModelSpec, params: ParamSet, x: np.ndarray) -> np.ndarray:
    """Evaluate the model on one input (in_dim,) or a batch (n, in_dim)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = x[None, :] if single else x
    if rows.shape[1] != spec.in_dim:
        raise ValueError(f"input has {rows.shape[1]} columns, expected {spec.in_dim}")
    p = _views(spec, params.values)
    if spec.kind == "linear":
        z = rows @ p["W"].T + p["b"]
    else:
        h = np.tanh(rows @ p["W1"].T + p["b1"])
        z = h @ p["W2"].T + p["b2"]
    y = _apply_activation(spec, z)
    return y[0] if single else y


def forward_backward(
    spec: ModelSpec, params: ParamSet, x: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Return (outputs, flat parameter gradient) for given upstream d(loss)/d(output).

    ``x`` and ``upstream`` are batched: (n, in_dim) and (n, out_dim).
    Gradients are summed over the batch rows.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if upstream.ndim == 1:
        upstream = upstream[None, :]
    if x.shape[0] != upstream.shape[0]:
        raise ValueError(
            f"batch mismatch: {x.shape[0]} inputs vs {upstream.shape[0]} upstream rows"
        )
    p = _views(spec, params.values)
    grad = np.zeros_like(params.values)
    g = _views(spec, grad)
    if spec.kind == "linear":
        z = x @ p["W"].T + p["b"]
        y = _apply_activation(spec, z)
        dz = upstream * _activation_deriv(spec, z)
        g["W"][...] = dz.T @ x
        g["b"][...] = dz.sum(axis=0)
    else:
        z1 = x @ p["W1"].T + p["b1"]
        h = np.tanh(z1)
        z2 = h @ p["W2"].T + p["b2"]
        y = _apply_activation(spec, z2)
        dz2 = upstream * _activation_deriv(spec, z2)
        g["W2"][...] = dz2.T @ h
        g["b2"][...] = dz2.sum(axis=0)
        dh = dz2 @ p["W2"]
        dz1 = dh * (1.0 - h * h)
        g["W1"][...] = dz1.T @ x
        g["b1"][...] = dz1.sum(axis=0)
    return y, grad


def adam_step(
    params: ParamSet,
    grad: np.ndarray,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.values.shape:
        raise ValueError(
            f"gradient has shape {grad.shape}, expected {params.values.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient contains non-finite entries")
    params.step += 1
    params.m *= beta1
    params.m += (1.0 - beta1) * grad
    params.v *= beta2
    params.v += (1.0 - beta2) * grad * grad
    m_hat = params.m / (1.0 - beta1**params.step)
    v_hat = params.v / (1.0 - beta2**params.step)
    params.values -= lr * m_hat / (np.sqrt(v_hat) + eps)


@dataclass(frozen=True)
class ScheduleSpec:
    """Linear interpolation from start to end over ``horizon`` steps."""

    start: float
    end: float
    horizon: int = 1

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")

    def at(self, t: int) -> float:
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        if self.horizon == 1:
            return self.end if t > 0 else self.start
        frac = min(t, self.horizon - 1) / (self.horizon - 1)
        return self.start + (self.end - self.start) * frac


def constant_schedule(value: float) -> ScheduleSpec:
    return ScheduleSpec(start=value, end=value, horizon=1)


def huber_loss(pred: float, target: float, delta: float = 1.0) -> tuple[float, float]:
    """Huber value and d(value)/d(pred) at one point."""
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    err = float(pred) - float(target)
    if abs(err) <= delta:
        return 0.5 * err * err, err
    return delta * (abs(err) - 0.5 * delta), delta * (1.0 if err > 0 else -1.0)
