import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rebalance.core import Dataset
from rebalance.neighbors import (NeighborModel, knn_query, pairwise_distances, radius_query)


def exhaustive_knn(R, ids, q, qid, k):
    """Naive oracle: sort every reference row by (self first, distance, row_id)."""
    d = np.sqrt(((R - q) ** 2).sum(axis=1))
    key = [(0 if rid == qid else 1, dist, rid) for dist, rid in zip(d, ids)]
    order = sorted(range(len(ids)), key=lambda i: key[i])[:k]
    return [int(ids[i]) for i in order], d[order]


def line_ds(values, ids=None):
    return Dataset(np.asarray(values, float)[:, None], np.zeros(len(values), int), ids)


def test_line_example():
    ref = line_ds([0, 1, 3])
    model = NeighborModel(ref)
    out = knn_query(model, ref.take([1]), 1)[0]
    assert out.head == (1, 0.0)
    assert out.tail == [(0, 1.0)]


def test_k_larger_than_reference_returns_everything_sorted():
    ref = line_ds([5, 1, 3, 2])
    out = knn_query(NeighborModel(ref), line_ds([0], [99]), 10)[0]
    assert out.row_ids.tolist() == [1, 3, 2, 0]
    assert np.all(np.diff(out.distances) >= 0)


def test_self_first_despite_duplicates_with_smaller_ids():
    ref = line_ds([2, 2, 2], ids=[0, 1, 2])
    out = knn_query(NeighborModel(ref), ref.take([2]), 2)[0]
    assert out.row_ids.tolist() == [2, 0, 1]


@pytest.mark.parametrize("strategy", ["brute_force", "metric_tree"])
def test_tree_matches_brute_on_300_points(strategy):
    rng = np.random.default_rng(0)
    ref = Dataset(rng.normal(size=(300, 6)), np.zeros(300, int))
    queries = Dataset(rng.normal(size=(50, 6)), np.zeros(50, int), np.arange(1000, 1050))
    got = knn_query(NeighborModel(ref, strategy, leaf_size=8), queries, 5)
    for q, nl in zip(queries.features, got):
        ids, d = exhaustive_knn(ref.features, ref.row_ids, q, -1, 6)
        assert nl.row_ids.tolist() == ids
        assert np.allclose(nl.distances, d, atol=1e-12)


def test_ties_broken_by_row_id_on_grid():
    # integer grid: many exactly equal distances
    g = np.array([(x, y) for x in range(6) for y in range(6)], float)
    ids = np.random.default_rng(1).permutation(len(g)) + 100
    ref = Dataset(g, np.zeros(len(g), int), ids)
    brute = knn_query(NeighborModel(ref, "brute_force"), ref, 8)
    tree = knn_query(NeighborModel(ref, "metric_tree", leaf_size=3), ref, 8)
    for q, qid, a, b in zip(g, ids, brute, tree):
        expect, _ = exhaustive_knn(g, ids, q, qid, 9)
        assert a.row_ids.tolist() == expect == b.row_ids.tolist()


def test_radius_zero_returns_self_only():
    ref = line_ds([0, 1, 2])
    out = radius_query(NeighborModel(ref), ref.take([1]), 0.0)[0]
    assert out.row_ids.tolist() == [1]
    assert not out.truncated


@pytest.mark.parametrize("strategy", ["brute_force", "metric_tree"])
def test_radius_cap_sets_truncation(strategy):
    rng = np.random.default_rng(2)
    ref = Dataset(rng.normal(size=(500, 3)), np.zeros(500, int))
    out = radius_query(NeighborModel(ref, strategy), ref.take([0]), 1e6, max_neighbors=100)[0]
    assert len(out) == 100 and out.truncated
    assert out.row_ids[0] == 0


@pytest.mark.parametrize("strategy", ["brute_force", "metric_tree"])
def test_radius_matches_exhaustive_scan(strategy):
    rng = np.random.default_rng(4)
    ref = Dataset(rng.uniform(size=(200, 3)), np.zeros(200, int))
    model = NeighborModel(ref, strategy, leaf_size=10)
    queries = Dataset(rng.uniform(size=(30, 3)), np.zeros(30, int), np.arange(500, 530))
    for r in (0.05, 0.2, 0.5):
        for q, nl in zip(queries.features, radius_query(model, queries, r, 1000)):
            d = np.sqrt(((ref.features - q) ** 2).sum(axis=1))
            assert set(nl.row_ids.tolist()) == set(np.flatnonzero(d <= r).tolist())


def test_radius_counts_agree_with_lists():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(150, 2))
    model = NeighborModel(X)
    radii = rng.uniform(0.1, 1.0, size=40)
    counts = model.radius_counts(X[:40], radii)
    strict = model.radius_counts(X[:40], radii, strict=True)
    D = pairwise_distances(X[:40], X)
    assert counts.tolist() == (D <= radii[:, None]).sum(axis=1).tolist()
    assert strict.tolist() == (D < radii[:, None]).sum(axis=1).tolist()


def test_errors():
    model = NeighborModel(line_ds([0, 1]))
    with pytest.raises(ValueError):
        model.radius_neighbors(np.zeros((1, 1)), -1.0)
    with pytest.raises(ValueError):
        model.kneighbors(np.zeros((1, 2)), 1)
    with pytest.raises(ValueError):
        NeighborModel(np.zeros((2, 1)), "kd")


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 8))
def test_enlarging_k_keeps_earlier_neighbors(seed, k):
    rng = np.random.default_rng(seed)
    X = np.round(rng.normal(size=(40, 2)), 1)  # rounding creates ties
    model = NeighborModel(X, "metric_tree", leaf_size=4)
    small, _ = model.kneighbors(X[:5], k)
    big, _ = model.kneighbors(X[:5], k + 3)
    assert np.array_equal(big[:, :k], small)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_distance_symmetry(seed):
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(7, 4)), rng.normal(size=(5, 4))
    assert np.allclose(pairwise_distances(A, B), pairwise_distances(B, A).T, atol=1e-12)
