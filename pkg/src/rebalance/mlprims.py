"""Lloyd k-means and least-squares propensity regression."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import instrument
from .core import Dataset
from .neighbors import pairwise_sq_distances
from .rng import RandomStream

log = logging.getLogger(__name__)

RIDGE = 1e-8


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray
    iterations_run: int
    inertia: float
    inertia_trace: tuple[float, ...] = field(default=())

    @property
    def k(self) -> int:
        return len(self.centroids)


def _points(data) -> np.ndarray:
    return data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)


def assign_points(centroids: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per row (lowest index on ties) and its squared distance."""
    D = pairwise_sq_distances(X, centroids)
    ids = np.argmin(D, axis=1)
    return ids, D[np.arange(len(X)), ids]


def _kmeans_pp(X: np.ndarray, k: int, stream: RandomStream) -> np.ndarray:
    n = len(X)
    chosen = [stream.integers(n)]
    closest = pairwise_sq_distances(X, X[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(stream.choice(closest, 1)[0])
        else:
            nxt = stream.integers(n)
        chosen.append(nxt)
        closest = np.minimum(closest, pairwise_sq_distances(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def kmeans_fit(data, k: int, max_iterations: int = 20,
               stream: RandomStream | None = None) -> KMeansModel:
    """k-means++ seeding followed by Lloyd iterations.

    Stops when assignments no longer change or after ``max_iterations``.
    An empty cluster is re-seeded at the point farthest from its centroid.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if max_iterations < 1:
        raise ValueError("max_iterations must be positive")
    X = _points(data)
    n = len(X)
    if n == 0:
        raise ValueError("cannot cluster an empty dataset")
    if k > n:
        log.warning("k-means: k=%d clamped to n=%d", k, n)
        k = n
    instrument.bump("kmeans_fit")
    stream = stream or RandomStream(0, "kmeans")
    centroids = _kmeans_pp(X, k, stream)
    ids, sq = assign_points(centroids, X)
    trace = [float(sq.sum())]
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        sums = np.zeros_like(centroids)
        np.add.at(sums, ids, X)
        counts = np.bincount(ids, minlength=k)
        filled = counts > 0
        centroids[filled] = sums[filled] / counts[filled, None]
        for c in np.flatnonzero(~filled):
            far = int(np.argmax(sq))
            centroids[c] = X[far]
            sq[far] = 0.0
        new_ids, sq = assign_points(centroids, X)
        trace.append(float(sq.sum()))
        if np.array_equal(new_ids, ids):
            break
        ids = new_ids
    return KMeansModel(centroids, iterations, trace[-1], tuple(trace))


def kmeans_assign(model: KMeansModel, data) -> np.ndarray:
    X = _points(data)
    if X.shape[1] != model.centroids.shape[1]:
        raise ValueError(
            f"dimension mismatch: model has {model.centroids.shape[1]}, data has {X.shape[1]}")
    return assign_points(model.centroids, X)[0]


@dataclass(frozen=True)
class PropensityModel:
    """Affine score ``X @ weights[:-1] + weights[-1]``."""

    weights: np.ndarray

    def predict(self, data) -> np.ndarray:
        X = _points(data)
        return X @ self.weights[:-1] + self.weights[-1]


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((len(X), 1))])


def fit_propensity(ds: Dataset, minority_label: int) -> PropensityModel:
    """Least squares of the minority indicator on the features (ridge 1e-8)."""
    if ds.n == 0:
        raise ValueError("cannot fit propensity on an empty dataset")
    instrument.bump("regression_fit")
    A = _design(ds.features)
    y = (ds.labels == minority_label).astype(np.float64)
    gram = A.T @ A + RIDGE * np.eye(A.shape[1])
    w = np.linalg.solve(gram, A.T @ y)
    return PropensityModel(w)


def propensity_scores(ds: Dataset, minority_label: int) -> np.ndarray:
    """Fitted scores min-max rescaled to [0, 1] (all 0 when constant)."""
    raw = fit_propensity(ds, minority_label).predict(ds)
    lo, hi = raw.min(), raw.max()
    if hi - lo <= 0:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)
