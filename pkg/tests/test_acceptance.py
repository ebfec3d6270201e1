"""Acceptance suite: one marked group per criterion, summarised at the end of the run."""

import csv
import os

import numpy as np
import pytest

from rebalance import cli
from rebalance.core import Dataset, class_counts, write_csv
from rebalance.datasets import binary, covertype_like, make_imbalanced
from rebalance.harness import gaussian_nb, stratified_folds, timing_scan
from rebalance.metrics import evaluate
from rebalance.neighbors import NeighborModel
from rebalance.parallel import workers
from rebalance.samplers import SAMPLERS, SamplerConfig, oversample, transform_detailed
from rebalance.samplers import smote_family as sf

from conftest import make_ds
from test_samplers import brute_knn_ids, segment_param

criterion = pytest.mark.criterion
SLOW_SAMPLERS = ("ans", "mwmote", "rbo")
FAST_SAMPLERS = tuple(s for s in SAMPLERS if s not in SLOW_SAMPLERS)


# -- 1 ------------------------------------------------------------------------

def balance_instances():
    return [
        binary(2000, 2, seed=0),
        binary(3000, 10, d=3, seed=1),
        binary(5000, 50, d=4, seed=2),
        make_imbalanced(2000, (0.5, 0.3, 0.15, 0.05), seed=3),
        make_imbalanced(4000, (50, 20, 5, 1), d=3, seed=4),
        make_imbalanced(5000, (0.4, 0.3, 0.2, 0.1), d=5, seed=5),
    ]


def check_balanced(sampler):
    for i, ds in enumerate(balance_instances()):
        out = transform_detailed(ds, SamplerConfig(seed=i), sampler).dataset
        counts = {c.count for c in class_counts(out)}
        target = max(c.count for c in class_counts(ds))
        assert counts == {target}, (sampler, i, counts)
        assert len(np.unique(out.row_ids)) == out.n


@criterion(1, "balance exactness")
@pytest.mark.parametrize("sampler", FAST_SAMPLERS)
def test_balance_exact(sampler):
    check_balanced(sampler)


@criterion(1, "balance exactness")
@pytest.mark.slow
@pytest.mark.parametrize("sampler", SLOW_SAMPLERS)
def test_balance_exact_slow_samplers(sampler):
    check_balanced(sampler)


# -- 2 ------------------------------------------------------------------------

@criterion(2, "metric fixtures")
def test_metric_fixtures():
    # hand-derived: recalls 3/4, 4/6; precisions 3/5, 4/5
    r = evaluate(np.array([[3, 1], [2, 4]]), beta=1.0)
    assert r.av_acc == pytest.approx(0.70000, abs=1e-5)
    assert r.m_avg == pytest.approx(0.70711, abs=1e-5)
    assert r.av_fb == pytest.approx(0.69697, abs=1e-5)
    assert r.cba == pytest.approx(0.63333, abs=1e-5)
    perfect = evaluate(np.diag([5, 7, 2]))
    assert (perfect.av_acc, perfect.m_avg, perfect.av_fb, perfect.cba) == (1.0, 1.0, 1.0, 1.0)
    none = evaluate(np.array([[9, 0], [3, 0]]))
    assert none.m_avg == 0.0
    assert none.per_class[1].recall == 0.0 and none.per_class[1].f_beta == 0.0


# -- 3 ------------------------------------------------------------------------

@criterion(3, "k-NN tree vs brute force")
def test_tree_matches_brute_force():
    rng = np.random.default_rng(2024)
    for trial in range(200):
        n, d, k = int(rng.integers(1, 501)), int(rng.integers(1, 9)), int(rng.integers(1, 11))
        X = rng.normal(size=(n, d))
        if trial % 4 == 0:
            X = np.round(X * 2) / 2  # lattice values force distance ties
        ids = rng.permutation(n * 3)[:n]
        q = rng.normal(size=(20, d))
        tree = NeighborModel(Dataset(X, np.zeros(n, int), ids), "metric_tree")
        brute = NeighborModel(Dataset(X, np.zeros(n, int), ids), "brute_force")
        for Q, qids in ((X, ids), (q, None)):
            ti, td = tree.kneighbors(Q, k, qids)
            bi, bd = brute.kneighbors(Q, k, qids)
            assert np.array_equal(ti, bi), trial
            assert np.array_equal(td, bd), trial


# -- 4 ------------------------------------------------------------------------

GEOMETRY_SAMPLERS = ("smote", "borderline_smote", "safe_level_smote", "adasyn", "cluster_smote")


def overlap(seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (40, 2)), rng.normal(1.5, 1, (120, 2))])
    return make_ds(X, [1] * 40 + [0] * 120)


@criterion(4, "synthetic rows lie on their segments")
@pytest.mark.parametrize("sampler", GEOMETRY_SAMPLERS)
def test_segment_geometry(sampler):
    for seed in range(10):
        ds = overlap(seed)
        batch = oversample(ds, 1, 150, SamplerConfig(seed=seed), sampler)
        assert len(batch) == 150
        tr = segment_param(batch, ds)
        assert tr[:, 1].max() <= 1e-9
        if sampler != "safe_level_smote":
            assert tr[:, 0].min() >= 0.0 and tr[:, 0].max() <= 1.0
            continue
        level = {i: sum(ds.labels[j] == 1 for j in brute_knn_ids(ds.features, ds.row_ids,
                                                                  i, 5, range(ds.n)))
                 for i in range(40)}
        for (t, _), b, q in zip(tr, batch.base_ids, batch.partner_ids):
            if q < 0:
                assert level[int(b)] > 0 and t == 0.0
                continue
            lo, hi = sf.safe_level_gap_interval(level[int(b)], level[int(q)])
            assert lo - 1e-9 <= t <= hi + 1e-9


# -- 5 ------------------------------------------------------------------------

@criterion(5, "determinism under parallelism")
@pytest.mark.parametrize("sampler", tuple(SAMPLERS))
def test_thread_count_does_not_change_output(sampler):
    ds = make_imbalanced(2000, (0.7, 0.2, 0.1), d=4, seed=11)
    cfg = SamplerConfig(seed=5)
    seen = set()
    for n in sorted({1, 4, os.cpu_count() or 1}):
        with workers(n):
            res = transform_detailed(ds, cfg, sampler)
        seen.add((tuple(b.digest() for b in res.batches),
                  res.dataset.features.tobytes(), res.dataset.row_ids.tobytes()))
    assert len(seen) == 1


# -- 6 ------------------------------------------------------------------------

@criterion(6, "sampling time ordering")
@pytest.mark.slow
def test_time_ordering():
    order = ["smote", "safe_level_smote", "ans", "mwmote", "rbo"]
    rows = timing_scan(covertype_like(n=10_000, d=10, seed=0), order, [8000], repeats=3)
    t = {r.sampler: r.seconds for r in rows}
    print("seconds:", {s: round(t[s], 3) for s in order},
          "rbo/smote:", round(t["rbo"] / t["smote"], 1))
    assert [t[s] for s in order] == sorted(t[s] for s in order)
    assert t["rbo"] / t["smote"] >= 20


# -- 7 ------------------------------------------------------------------------

@criterion(7, "Gaussian SMOTE gap moments")
def test_gaussian_gap_moments():
    ds = make_ds([[0.0], [1.0], [5.0], [6.0], [7.0]], [1, 1, 0, 0, 0])
    batch = oversample(ds, 1, 10_000, SamplerConfig(k=1, sigma=0.5, seed=0), "gaussian_smote")
    tr = segment_param(batch, ds)
    assert tr[:, 1].max() <= 1e-9
    gaps = tr[:, 0]
    assert len(gaps) == 10_000
    assert -0.02 <= gaps.mean() <= 0.02
    assert 0.475 <= gaps.std() <= 0.525


# -- 8 ------------------------------------------------------------------------

@criterion(8, "CCR cleaning")
def test_ccr_cleans_spheres():
    rng = np.random.default_rng(8)
    n_moved = 0
    for trial in range(10):
        n_min, n_maj = int(rng.integers(10, 40)), int(rng.integers(80, 300))
        d = int(rng.integers(2, 5))
        X = np.vstack([rng.normal(0, 1, (n_min, d)), rng.normal(0.8, 1, (n_maj, d))])
        ds = make_ds(X, [1] * n_min + [0] * n_maj)
        res = transform_detailed(ds, SamplerConfig(seed=trial, energy=0.5), "ccr")
        (batch,) = res.batches
        ids = np.array(sorted(batch.radii))
        centres = ds.features[ds.positions(ids)]
        radii = np.array([batch.radii[int(i)] for i in ids])
        out = res.dataset
        maj = out.features[out.positions(ds.row_ids[n_min:])]
        D = np.sqrt(((maj[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2))
        assert np.all(D >= radii[None, :] - 1e-9), trial
        n_moved += len(batch.relocated)
        for rid, x in batch.relocated.items():
            dist = np.sqrt(((centres - x) ** 2).sum(axis=1))
            assert np.min(np.abs(dist - radii)) <= 1e-9, (trial, rid)
            assert np.array_equal(out.features[out.positions([rid])[0]], x)
    assert n_moved > 0


# -- 9 ------------------------------------------------------------------------

@criterion(9, "end-to-end benchmark")
def test_benchmark_pipeline(tmp_path):
    rng = np.random.default_rng(9)
    n_min = 5000 // 21
    X = np.vstack([rng.normal(0, 1, (5000 - n_min, 2)), rng.normal(0, 0.5, (n_min, 2))])
    ds = Dataset(X, np.r_[np.zeros(5000 - n_min, int), np.ones(n_min, int)])
    # precondition: with class priors the minority density never wins
    assert not np.any(gaussian_nb(ds, ds) == 1)
    path = tmp_path / "ir20.csv"
    write_csv(ds, path)
    out = tmp_path / "out"
    assert cli.main(["benchmark", "--in", str(path), "--samplers", "smote,random_oversample",
                     "--classifiers", "gaussian_nb", "--format", "markdown,csv",
                     "--out-dir", str(out)]) == 0
    with open(out / "benchmark.csv") as fh:
        rows = {r["Sampling Method"]: r for r in csv.DictReader(fh)}
    assert list(rows) == ["None", "Random Oversampling", "SMOTE"]
    header = (out / "benchmark.md").read_text()
    assert "| Sampling Method | AvAvg | AvFb | MAvG | CBA |" in header
    assert float(rows["None"]["MAvG"]) == 0.0
    assert float(rows["SMOTE"]["MAvG"]) > 0.0
    assert float(rows["Random Oversampling"]["MAvG"]) > 0.0


# -- 10 -----------------------------------------------------------------------

@criterion(10, "fold leak freedom and stratification")
def test_folds_leak_free_and_stratified():
    rng = np.random.default_rng(10)
    for trial in range(50):
        k = int(rng.integers(2, 6))
        n_folds = int(rng.integers(2, 8))
        counts = rng.integers(n_folds, 120, size=k)
        y = np.repeat(np.arange(k), counts)
        ids = rng.permutation(len(y) * 2)[:len(y)]
        ds = Dataset(rng.normal(size=(len(y), 3)), y, ids)
        plan = stratified_folds(ds, n_folds, seed=trial)
        assert len(plan.folds) == n_folds
        all_test = np.concatenate([f.test_ids for f in plan.folds])
        assert sorted(all_test.tolist()) == sorted(ids.tolist())
        for i, f in enumerate(plan.folds):
            train, test = plan.split(ds, i)
            assert not set(train.row_ids.tolist()) & set(test.row_ids.tolist())
            assert train.n + test.n == ds.n
            for c in range(k):
                share = counts[c] / n_folds
                got = int(np.sum(test.labels == c))
                assert np.floor(share) <= got <= np.ceil(share)
            # synthetic rows may only come from the training split
            res = transform_detailed(train, SamplerConfig(seed=trial), "smote",
                                     first_row_id=int(ids.max()) + 1)
            used = np.concatenate([np.r_[b.base_ids, b.partner_ids] for b in res.batches]
                                  or [np.empty(0, int)])
            assert set(used[used >= 0].tolist()) <= set(train.row_ids.tolist())
            assert not set(res.dataset.row_ids.tolist()) & set(test.row_ids.tolist())
