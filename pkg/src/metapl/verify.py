"""Independent gradient oracles.

finite_diff_grad checks any analytic gradient against central differences.
exact_expected_teacher_grad computes the exact teacher gradient of the
one-step-lookahead objective by enumerating every pseudo-label assignment,
so the sampled score-function estimator has something exact to be compared
with. soft_path_teacher_grad_fd differentiates the soft-target variant of
the same objective numerically.
"""
from __future__ import annotations

from itertools import product

import numpy as np

from .model import predict
from .numcore import GradVec, Params, backprop, cross_entropy

FD_EPS_DEFAULT = 1e-5
ENUMERATION_LIMIT = 10_000


def relative_error_norm(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / max(1e-8, ||a||, ||b||); stable near zero gradients."""
    return float(
        np.linalg.norm(a - b) / max(1e-8, np.linalg.norm(a), np.linalg.norm(b))
    )


def relative_error_max(a: np.ndarray, b: np.ndarray) -> float:
    """max_i |a_i - b_i| / max(1e-8, |a_i| + |b_i|)."""
    denom = np.maximum(1e-8, np.abs(a) + np.abs(b))
    return float(np.max(np.abs(a - b) / denom))


def finite_diff_grad(loss_fn, params: Params, eps: float = FD_EPS_DEFAULT) -> GradVec:
    """Central-difference gradient of loss_fn over every parameter."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    base = params.values
    grad = np.empty_like(base)
    for i in range(base.size):
        probe = base.copy()
        probe[i] = base[i] + eps
        lo_hi = loss_fn(params.replace_values(probe))
        probe[i] = base[i] - eps
        lo_lo = loss_fn(params.replace_values(probe))
        if not (np.isfinite(lo_hi) and np.isfinite(lo_lo)):
            raise ValueError(f"non-finite loss while probing coordinate {i}")
        grad[i] = (lo_hi - lo_lo) / (2.0 * eps)
    return GradVec(grad)


def enumerate_assignments(k: int, m: int):
    """All k**m hard-label assignments for m examples, as int64 arrays."""
    if k**m > ENUMERATION_LIMIT:
        raise ValueError(f"K^m = {k**m} exceeds enumeration limit {ENUMERATION_LIMIT}")
    for combo in product(range(k), repeat=m):
        yield np.asarray(combo, dtype=np.int64)


def expected_student_params(
    theta_T: Params, theta_S: Params, x_u: np.ndarray, eta_S: float
) -> Params:
    """Student parameters after the expected one-step pseudo-label update.

    theta_S - eta_S * sum_y P(y | theta_T) * g_S(y), where y ranges over
    every hard-label assignment to the batch and g_S(y) is the student's
    batch-mean cross-entropy gradient for that assignment.
    """
    dist = predict(theta_T, x_u)
    k, m = dist.shape[1], x_u.shape[0]
    mean_g = np.zeros_like(theta_S.values)
    for y in enumerate_assignments(k, m):
        p = float(np.prod(dist[np.arange(m), y]))
        _, g = backprop(theta_S, x_u, y)
        mean_g += p * g.values
    return theta_S.replace_values(theta_S.values - eta_S * mean_g)


def exact_expected_teacher_grad(
    theta_T: Params,
    theta_S: Params,
    x_u: np.ndarray,
    x_l: np.ndarray,
    y_l: np.ndarray,
    eta_S: float,
) -> GradVec:
    """Exact teacher gradient of the expected one-step objective.

    The objective is CE(y_l, S(x_l; theta_bar)) with theta_bar the expected
    post-update student parameters, holding the student's gradients fixed
    at theta_S. Differentiating the assignment probabilities exactly gives

        -eta_S * sum_y P(y) * (g_l . g_S(y)) * d log P(y) / d theta_T

    where g_l is evaluated at theta_bar. Because the teacher cross-entropy
    averages over the m batch examples, d log P / d theta_T equals -m times
    the teacher's batch-mean CE gradient on assignment y; for m = 1 the sum
    is exactly eta_S * E[(g_l . g_S) * grad CE(y, T)].
    """
    dist = predict(theta_T, x_u)
    k, m = dist.shape[1], x_u.shape[0]
    assignments = list(enumerate_assignments(k, m))
    probs = []
    g_s = []
    for y in assignments:
        probs.append(float(np.prod(dist[np.arange(m), y])))
        _, g = backprop(theta_S, x_u, y)
        g_s.append(g.values)
    theta_bar = theta_S.replace_values(
        theta_S.values - eta_S * sum(p * g for p, g in zip(probs, g_s))
    )
    _, g_l = backprop(theta_bar, x_l, y_l)

    total = np.zeros_like(theta_T.values)
    for y, p, g in zip(assignments, probs, g_s):
        _, g_t = backprop(theta_T, x_u, y)  # batch-mean teacher CE gradient
        total += p * float(np.dot(g_l.values, g)) * g_t.values
    return GradVec(eta_S * m * total)


def expected_objective(
    theta_T: Params,
    theta_S: Params,
    x_u: np.ndarray,
    x_l: np.ndarray,
    y_l: np.ndarray,
    eta_S: float,
) -> float:
    """CE(y_l, S(x_l; .)) at the expected post-update student parameters.

    Finite differences of this map over theta_T are the independent
    cross-check for exact_expected_teacher_grad.
    """
    theta_bar = expected_student_params(theta_T, theta_S, x_u, eta_S)
    return cross_entropy(y_l, predict(theta_bar, x_l))


def soft_path_teacher_grad_fd(
    theta_T: Params,
    theta_S: Params,
    x_u: np.ndarray,
    x_l: np.ndarray,
    y_l: np.ndarray,
    eta_S: float,
    eps: float = FD_EPS_DEFAULT,
) -> GradVec:
    """Numerical teacher gradient when the student learns soft targets.

    With the full predicted distribution as the student's target the
    one-step objective is differentiable in the teacher parameters; this
    evaluates that gradient by central differences, holding theta_S fixed.
    """

    def loss_fn(tp: Params) -> float:
        soft = predict(tp, x_u)
        _, g = backprop(theta_S, x_u, soft)
        updated = theta_S.replace_values(theta_S.values - eta_S * g.values)
        return cross_entropy(y_l, predict(updated, x_l))

    return finite_diff_grad(loss_fn, theta_T, eps)
