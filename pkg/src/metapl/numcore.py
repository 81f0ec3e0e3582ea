"""Dense numeric kernel: MLP forward/backward, losses, SGD with momentum.

Parameters live in a single flat float64 vector so that whole-network
gradient dot products (the feedback coefficient) are one call to np.dot.
All functions are pure: they never mutate their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-12  # clamp inside log() so saturated predictions stay finite
ZERO_NORM_EPS = 1e-12  # below this norm a vector counts as zero for cosine

ACTIVATIONS = ("sigmoid", "relu")


class ShapeError(ValueError):
    """Array dimensions incompatible with a network's layer descriptor."""


@dataclass(frozen=True)
class Params:
    """Flat parameter vector plus the layer layout that interprets it.

    shape is an ordered tuple of (fan_in, fan_out) pairs; the flat layout is
    [W0 row-major, b0, W1, b1, ...]. activation applies to every hidden
    layer; the last layer emits raw logits.
    """

    values: np.ndarray
    shape: tuple[tuple[int, int], ...]
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        expected = param_count(self.shape)
        if self.values.shape != (expected,):
            raise ShapeError(
                f"values has shape {self.values.shape}, layout needs ({expected},)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite parameter values")

    def replace_values(self, values: np.ndarray) -> "Params":
        return Params(values=values, shape=self.shape, activation=self.activation)


@dataclass(frozen=True)
class GradVec:
    """Flat gradient vector congruent with some Params.values."""

    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite gradient values")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def param_count(shape) -> int:
    return int(sum(fi * fo + fo for fi, fo in shape))


def zeros_like_grad(params: Params) -> GradVec:
    return GradVec(np.zeros_like(params.values))


def unpack_layers(params: Params):
    """Yield (W, b) views into the flat vector, one pair per layer."""
    pos = 0
    out = []
    for fan_in, fan_out in params.shape:
        w = params.values[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = params.values[pos : pos + fan_out]
        pos += fan_out
        out.append((w, b))
    return out


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sigmoid":
        # single exp on -|z| keeps the argument non-positive, so no overflow
        e = np.exp(-np.abs(z))
        return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.maximum(z, 0.0)


def _activate_deriv(a: np.ndarray, z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sigmoid":
        return a * (1.0 - a)
    return (z > 0.0).astype(np.float64)


def forward(params: Params, x: np.ndarray) -> np.ndarray:
    """Logits [batch x K] for inputs x [batch x d]."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"x must be 2-D, got ndim={x.ndim}")
    if x.shape[1] != params.shape[0][0]:
        raise ShapeError(
            f"x has {x.shape[1]} features, first layer expects {params.shape[0][0]}"
        )
    layers = unpack_layers(params)
    a = x
    for i, (w, b) in enumerate(layers):
        z = a @ w + b
        a = _activate(z, params.activation) if i < len(layers) - 1 else z
    return a


def softmax_temp(logits: np.ndarray, tau: float) -> np.ndarray:
    """Temperature-scaled softmax along the last axis; tau=1 is standard."""
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    logits = np.asarray(logits, dtype=np.float64)
    scaled = logits / tau
    scaled = scaled - scaled.max(axis=-1, keepdims=True)
    e = np.exp(scaled)
    return e / e.sum(axis=-1, keepdims=True)


def _as_soft_targets(target: np.ndarray, k: int) -> np.ndarray:
    """Hard integer labels become one-hot rows; soft rows pass through."""
    target = np.asarray(target)
    if target.ndim == 1:
        if not np.issubdtype(target.dtype, np.integer):
            raise ValueError("1-D targets must be integer class labels")
        if target.min() < 0 or target.max() >= k:
            raise ValueError(f"label outside [0, {k})")
        onehot = np.zeros((target.shape[0], k), dtype=np.float64)
        onehot[np.arange(target.shape[0]), target] = 1.0
        return onehot
    if target.ndim == 2 and target.shape[1] == k:
        return target.astype(np.float64)
    raise ShapeError(f"target shape {target.shape} incompatible with K={k}")


def cross_entropy(target: np.ndarray, pred: np.ndarray) -> float:
    """Mean cross-entropy over a batch of distributions.

    target is either a 1-D integer label vector (treated as one-hot) or a
    [batch x K] matrix of distributions. pred is a [batch x K] matrix of
    probabilities, clamped to PROB_FLOOR inside the log.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim != 2 or pred.shape[0] == 0:
        raise ValueError(f"pred must be a nonempty [batch x K] matrix, got {pred.shape}")
    q = _as_soft_targets(target, pred.shape[1])
    if q.shape[0] != pred.shape[0]:
        raise ShapeError(f"batch mismatch: target {q.shape[0]} vs pred {pred.shape[0]}")
    return float(-np.mean(np.sum(q * np.log(np.maximum(pred, PROB_FLOOR)), axis=1)))


def backprop(params: Params, x: np.ndarray, target: np.ndarray) -> tuple[float, GradVec]:
    """Loss and exact gradient of cross_entropy(target, softmax(forward(x))).

    target follows the cross_entropy convention (integer labels or soft
    rows). The gradient is the analytic batch-mean gradient; with a
    softmax head the output delta is (softmax(z) - target) / batch.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.shape[0][0]:
        raise ShapeError(f"x shape {x.shape} incompatible with first layer")
    layers = unpack_layers(params)
    n_layers = len(layers)

    acts = [x]  # post-activation outputs, acts[0] is the input
    pre = []  # pre-activation z per layer
    a = x
    for i, (w, b) in enumerate(layers):
        z = a @ w + b
        pre.append(z)
        a = _activate(z, params.activation) if i < n_layers - 1 else z
        acts.append(a)

    probs = softmax_temp(acts[-1], 1.0)
    q = _as_soft_targets(target, probs.shape[1])
    if q.shape[0] != probs.shape[0]:
        raise ShapeError(f"batch mismatch: target {q.shape[0]} vs x {probs.shape[0]}")
    loss = float(-np.mean(np.sum(q * np.log(np.maximum(probs, PROB_FLOOR)), axis=1)))

    n = x.shape[0]
    grad = np.empty_like(params.values)
    delta = (probs - q) / n  # [batch x K]
    # walk layers backwards, filling the flat gradient in layout order
    offsets = []
    pos = 0
    for fan_in, fan_out in params.shape:
        offsets.append(pos)
        pos += fan_in * fan_out + fan_out
    for i in range(n_layers - 1, -1, -1):
        w, _ = layers[i]
        fan_in, fan_out = params.shape[i]
        gw = acts[i].T @ delta
        gb = delta.sum(axis=0)
        o = offsets[i]
        grad[o : o + fan_in * fan_out] = gw.ravel()
        grad[o + fan_in * fan_out : o + fan_in * fan_out + fan_out] = gb
        if i > 0:
            delta = (delta @ w.T) * _activate_deriv(acts[i], pre[i - 1], params.activation)
    return loss, GradVec(grad)


def sgd_momentum_step(
    params: Params, grad: GradVec, lr: float, mu: float, buf: GradVec
) -> tuple[Params, GradVec]:
    """One Nesterov-momentum SGD step; returns updated params and buffer.

    buf' = mu * buf + g, step direction = g + mu * buf'. With mu = 0 this
    is plain SGD: theta - lr * g.
    """
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"momentum must be in [0, 1), got {mu}")
    if grad.values.shape != params.values.shape or buf.values.shape != params.values.shape:
        raise ShapeError("gradient or buffer not congruent with params")
    new_buf = mu * buf.values + grad.values
    direction = grad.values + mu * new_buf
    new_values = params.values - lr * direction
    return params.replace_values(new_values), GradVec(new_buf)


def cosine_similarity(a: GradVec, b: GradVec) -> float:
    """Cosine of the angle between two gradients; 0 if either is ~zero."""
    if a.values.shape != b.values.shape:
        raise ShapeError("vectors not congruent")
    na = np.linalg.norm(a.values)
    nb = np.linalg.norm(b.values)
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        return 0.0
    return float(np.clip(np.dot(a.values, b.values) / (na * nb), -1.0, 1.0))
