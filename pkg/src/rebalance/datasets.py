"""Seeded synthetic classification data for tests, examples and timing runs."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Dataset
from .samplers.base import allocate

# class shares of the UCI Covertype data (7 cover types)
COVERTYPE_PROPORTIONS = (0.365, 0.488, 0.062, 0.005, 0.016, 0.030, 0.034)


def make_imbalanced(n: int, proportions: Sequence[float], d: int = 2,
                    separation: float = 2.0, noise: float = 1.0,
                    seed: int = 0, gaussian_centres: bool = False) -> Dataset:
    """Gaussian blobs, one per class, with class sizes set by ``proportions``.

    Class centres are drawn uniformly in a cube of side ``2 * separation``,
    or from N(0, separation^2) with ``gaussian_centres``. Every class gets at
    least one row.
    """
    if n < len(proportions):
        raise ValueError("n must be at least the number of classes")
    rng = np.random.default_rng(seed)
    k = len(proportions)
    weights = np.asarray(proportions, dtype=np.float64)
    counts = allocate(weights, n, list(range(k)))
    if (counts == 0).any():
        counts = allocate(weights, n - k, list(range(k))) + 1
    if gaussian_centres:
        centres = rng.normal(scale=separation, size=(k, d))
    else:
        centres = rng.uniform(-separation, separation, size=(k, d))
    labels = np.repeat(np.arange(k), counts)
    X = centres[labels] + rng.normal(scale=noise, size=(n, d))
    order = rng.permutation(n)
    return Dataset(X[order], labels[order], None, tuple(f"x{j}" for j in range(d)),
                   tuple(str(c) for c in range(k)), "label")


def binary(n: int, imbalance_ratio: float, d: int = 2, separation: float = 2.0,
           seed: int = 0) -> Dataset:
    """Two classes with majority/minority size ratio ``imbalance_ratio``."""
    return make_imbalanced(n, (imbalance_ratio, 1.0), d, separation, seed=seed)


def covertype_like(n: int = 8000, d: int = 10, seed: int = 0) -> Dataset:
    """Seven heavily overlapping classes with Covertype's class shares."""
    return make_imbalanced(n, COVERTYPE_PROPORTIONS, d, separation=0.3, seed=seed,
                           gaussian_centres=True)
