import itertools

import numpy as np
import pytest

from rebalance.core import Dataset
from rebalance.mlprims import (assign_points, fit_propensity, kmeans_assign, kmeans_fit,
                               propensity_scores)
from rebalance.parallel import workers
from rebalance.rng import RandomStream


def best_two_partition(X):
    """Exhaustive oracle: the 2-partition with least inertia and its centroids."""
    best = None
    n = len(X)
    for mask in itertools.product([0, 1], repeat=n):
        m = np.array(mask, bool)
        if m.all() or not m.any():
            continue
        c = np.vstack([X[~m].mean(axis=0), X[m].mean(axis=0)])
        inertia = ((X[~m] - c[0]) ** 2).sum() + ((X[m] - c[1]) ** 2).sum()
        if best is None or inertia < best[0]:
            best = (inertia, c)
    return best


def test_two_cluster_example_matches_exhaustive_oracle():
    X = np.array([[0, 0], [0.1, 0], [10, 0], [10.1, 0]])
    model = kmeans_fit(X, 2, stream=RandomStream(0, "t"))
    inertia, oracle = best_two_partition(X)
    got = model.centroids[np.argsort(model.centroids[:, 0])]
    assert np.allclose(got, oracle[np.argsort(oracle[:, 0])], atol=1e-9)
    assert model.inertia == pytest.approx(inertia, abs=1e-9)


def test_k_one_is_mean_and_k_n_is_exact():
    X = np.random.default_rng(0).normal(size=(12, 3))
    assert np.allclose(kmeans_fit(X, 1).centroids[0], X.mean(axis=0))
    assert kmeans_fit(X, 12).inertia == pytest.approx(0.0, abs=1e-12)


def test_inertia_trace_never_increases():
    rng = np.random.default_rng(1)
    for seed in range(10):
        X = rng.normal(size=(200, 3))
        trace = kmeans_fit(X, 6, 50, RandomStream(seed, "k")).inertia_trace
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


def test_kmeans_deterministic_across_workers():
    X = np.random.default_rng(2).normal(size=(500, 4))
    out = []
    for n in (1, 4):
        with workers(n):
            out.append(kmeans_fit(X, 5, 20, RandomStream(9, "k")).centroids.tobytes())
    assert out[0] == out[1]


def test_assign_examples():
    model = kmeans_fit(np.array([[0.0], [2.0]]), 2)
    centroids = model.centroids
    assert kmeans_assign(model, centroids[[1]]).tolist() == [1]
    mid = np.array([[centroids.mean()]])
    assert kmeans_assign(model, mid).tolist() == [0]
    rng = np.random.default_rng(3)
    C, X = rng.normal(size=(4, 2)), rng.normal(size=(100, 2))
    brute = [int(np.argmin([((x - c) ** 2).sum() for c in C])) for x in X]
    assert assign_points(C, X)[0].tolist() == brute
    with pytest.raises(ValueError):
        kmeans_assign(model, np.zeros((1, 2)))


def test_equidistant_point_goes_to_lowest_index():
    C = np.array([[-1.0], [1.0]])
    assert assign_points(C, np.array([[0.0]]))[0].tolist() == [0]
    assert assign_points(C[::-1], np.array([[0.0]]))[0].tolist() == [0]


def test_propensity_examples():
    ds = Dataset(np.array([[0.0], [1.0]]), [0, 1])
    pred = fit_propensity(ds, 1).predict(ds)
    assert np.allclose(pred, [0.0, 1.0], atol=1e-6)
    const = Dataset(np.random.default_rng(0).normal(size=(10, 2)), np.ones(10, int))
    assert np.allclose(fit_propensity(const, 1).predict(const), 1.0, atol=1e-9)


def test_propensity_matches_pseudoinverse_and_residuals_are_orthogonal():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(50, 3))
    y = (rng.uniform(size=50) < 0.3).astype(int)
    ds = Dataset(X, y)
    pred = fit_propensity(ds, 1).predict(ds)
    A = np.hstack([X, np.ones((50, 1))])
    oracle = A @ (np.linalg.pinv(A) @ y)
    assert np.allclose(pred, oracle, atol=1e-6)
    assert np.allclose(A.T @ (y - pred), 0.0, atol=1e-6)


def test_propensity_scores_rescaled():
    rng = np.random.default_rng(5)
    ds = Dataset(rng.normal(size=(30, 2)), rng.integers(0, 2, 30))
    s = propensity_scores(ds, 1)
    assert s.min() == 0.0 and s.max() == 1.0


def test_errors():
    with pytest.raises(ValueError):
        kmeans_fit(np.zeros((0, 2)), 2)
    with pytest.raises(ValueError):
        kmeans_fit(np.zeros((3, 2)), 0)
    with pytest.raises(ValueError):
        fit_propensity(Dataset(np.zeros((0, 1)), []), 1)
