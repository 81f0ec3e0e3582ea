"""Stochastic input perturbation and label smoothing targets."""
from __future__ import annotations

import numpy as np


def jitter(x: np.ndarray, magnitude: float, rng_seed) -> np.ndarray:
    """x plus per-coordinate Gaussian noise of sd = magnitude.

    Acts as the label-preserving stochastic transform for the consistency
    branch on low-dimensional data. rng_seed may be an int or a Generator.
    magnitude = 0 returns the input unchanged.
    """
    if magnitude < 0:
        raise ValueError(f"magnitude must be >= 0, got {magnitude}")
    x = np.asarray(x, dtype=np.float64)
    if magnitude == 0:
        return x.copy()
    rng = np.random.default_rng(rng_seed)
    return x + rng.normal(0.0, magnitude, x.shape)


def label_smooth(y, k: int, eps: float) -> np.ndarray:
    """(1 - eps) * onehot(y) + eps / k, rows for each label in y."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must be in [0, 1), got {eps}")
    y = np.atleast_1d(np.asarray(y))
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"label outside [0, {k})")
    out = np.full((y.shape[0], k), eps / k, dtype=np.float64)
    out[np.arange(y.shape[0]), y] += 1.0 - eps
    return out
