"""Stratified cross-validation, baseline classifiers and timing runs."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DataError, Dataset, class_counts
from .metrics import MetricReport, confusion, evaluate
from .rng import RandomStream
from .samplers import SAMPLER_IDS, SamplerConfig, UnknownSamplerError, allocate, transform

VARIANCE_FLOOR = 1e-9

Classifier = Callable[[Dataset, Dataset], np.ndarray]


@dataclass(frozen=True)
class Fold:
    train_ids: np.ndarray
    test_ids: np.ndarray


@dataclass(frozen=True)
class FoldPlan:
    n_folds: int
    folds: tuple[Fold, ...]
    seed: int

    def split(self, ds: Dataset, index: int) -> tuple[Dataset, Dataset]:
        fold = self.folds[index]
        return ds.take(ds.positions(fold.train_ids)), ds.take(ds.positions(fold.test_ids))


def _class_permutation(ds: Dataset, label: int, seed: int, tag: str) -> np.ndarray:
    """Row positions of one class in a seeded random order."""
    pos = np.flatnonzero(ds.labels == label)
    pos = pos[np.argsort(ds.row_ids[pos], kind="stable")]
    return pos[RandomStream.for_task(seed, tag, label).permutation(len(pos))]


def stratified_folds(ds: Dataset, n_folds: int = 5, seed: int = 0) -> FoldPlan:
    """Deal each class's shuffled rows round-robin over the folds.

    Each class starts where the previous one stopped, so fold sizes also
    differ by at most one overall.
    """
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    members: list[list[np.ndarray]] = [[] for _ in range(n_folds)]
    offset = 0
    for c in class_counts(ds):
        if c.count < n_folds:
            raise DataError(f"class {ds.label_text(c.label)} has {c.count} rows, "
                            f"fewer than {n_folds} folds")
        pos = _class_permutation(ds, c.label, seed, "folds")
        slot = (offset + np.arange(len(pos))) % n_folds
        for f in range(n_folds):
            members[f].append(pos[slot == f])
        offset += len(pos)
    test = [np.sort(ds.row_ids[np.concatenate(m)]) for m in members]
    folds = tuple(Fold(np.sort(np.concatenate(test[:f] + test[f + 1:])), test[f])
                  for f in range(n_folds))
    return FoldPlan(n_folds, folds, seed)


def stratified_subset(ds: Dataset, size: int, seed: int = 0) -> Dataset:
    """``size`` rows keeping class proportions (largest-remainder rounding)."""
    if size > ds.n:
        raise ValueError(f"size {size} exceeds dataset size {ds.n}")
    counts = class_counts(ds)
    quotas = allocate([c.count for c in counts], size, [c.label for c in counts])
    keep = [_class_permutation(ds, c.label, seed, "subset")[:q]
            for c, q in zip(counts, quotas)]
    return ds.take(np.sort(np.concatenate(keep)))


# -- classifiers ------------------------------------------------------------

def _class_list(train: Dataset, test: Dataset) -> np.ndarray:
    labels = np.union1d(np.unique(train.labels), np.unique(test.labels))
    missing = np.setdiff1d(labels, train.labels)
    if len(missing):
        raise DataError(f"class {int(missing[0])} has no training rows")
    return labels


def gaussian_nb(train: Dataset, test: Dataset, uniform_priors: bool = False) -> np.ndarray:
    """Diagonal Gaussian naive Bayes with a variance floor."""
    labels = _class_list(train, test)
    scores = np.empty((test.n, len(labels)))
    for j, c in enumerate(labels):
        Xc = train.features[train.labels == c]
        mu = Xc.mean(axis=0)
        var = np.maximum(Xc.var(axis=0), VARIANCE_FLOOR)
        ll = -0.5 * (np.log(2 * np.pi * var).sum()
                     + (((test.features - mu) ** 2) / var).sum(axis=1))
        prior = 0.0 if uniform_priors else np.log(len(Xc) / train.n)
        scores[:, j] = ll + prior
    return labels[np.argmax(scores, axis=1)]


def nearest_centroid(train: Dataset, test: Dataset) -> np.ndarray:
    labels = _class_list(train, test)
    centroids = np.vstack([train.features[train.labels == c].mean(axis=0) for c in labels])
    d2 = ((test.features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return labels[np.argmin(d2, axis=1)]


CLASSIFIERS: dict[str, Classifier] = {
    "gaussian_nb": gaussian_nb,
    "nearest_centroid": nearest_centroid,
}

CLASSIFIER_NAMES = {"gaussian_nb": "Gaussian NB", "nearest_centroid": "Nearest Centroid"}


def resolve_classifier(classifier: str | Classifier) -> tuple[str, Classifier]:
    if callable(classifier):
        return getattr(classifier, "__name__", "custom"), classifier
    if classifier not in CLASSIFIERS:
        raise ValueError(f"unknown classifier {classifier!r}; valid: {', '.join(CLASSIFIERS)}")
    return classifier, CLASSIFIERS[classifier]


def classify_baseline(train: Dataset, test: Dataset, classifier_id: str) -> np.ndarray:
    return resolve_classifier(classifier_id)[1](train, test)


# -- experiments --------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentRecord:
    """One fold of one (dataset, sampler, classifier) run. Times are seconds."""

    dataset: str
    sampler: str
    classifier: str
    fold: int
    report: MetricReport
    sampling_time: float
    classifier_time: float
    n_train: int
    n_synthetic: int

    @property
    def total_time(self) -> float:
        return self.sampling_time + self.classifier_time


def min_max_scale(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset]:
    """Scale both splits with the train split's per-feature range."""
    lo = train.features.min(axis=0)
    span = train.features.max(axis=0) - lo
    span = np.where(span > 0, span, 1.0)
    return (train.with_features((train.features - lo) / span),
            test.with_features((test.features - lo) / span))


def run_experiment(ds: Dataset, sampler_id: str, classifier: str | Classifier = "gaussian_nb",
                   cfg: SamplerConfig | None = None, n_folds: int = 5,
                   fold_seed: int | None = None, dataset_name: str = "dataset",
                   normalize: bool = False, plan: FoldPlan | None = None
                   ) -> list[ExperimentRecord]:
    """Resample each training split, fit, and score on the untouched test split.

    Synthetic rows get row_ids past every original row, so none can appear
    in a test split; this is checked for every fold.
    """
    cfg = cfg or SamplerConfig()
    if sampler_id not in SAMPLER_IDS:
        raise UnknownSamplerError(sampler_id)
    clf_name, clf = resolve_classifier(classifier)
    if plan is None:
        plan = stratified_folds(ds, n_folds, cfg.seed if fold_seed is None else fold_seed)
    first_synthetic = int(ds.row_ids.max()) + 1
    n_classes = int(ds.labels.max()) + 1
    records = []
    for f in range(plan.n_folds):
        train, test = plan.split(ds, f)
        if normalize:
            train, test = min_max_scale(train, test)
        t0 = time.perf_counter()
        balanced = (train if sampler_id == "none"
                    else transform(train, cfg, sampler_id, first_synthetic))
        t1 = time.perf_counter()
        pred = clf(balanced, test)
        t2 = time.perf_counter()
        synthetic = balanced.row_ids[balanced.row_ids >= first_synthetic]
        if np.intersect1d(synthetic, test.row_ids).size:
            raise RuntimeError(f"fold {f}: synthetic row_id found in the test split")
        cm = confusion(test.labels, pred, n_classes)
        records.append(ExperimentRecord(dataset_name, sampler_id, clf_name, f,
                                        evaluate(cm, cfg.beta), t1 - t0, t2 - t1,
                                        balanced.n, len(synthetic)))
    return records


# -- timing -----------------------------------------------------------------

@dataclass(frozen=True)
class TimingRow:
    sampler: str
    size: int
    seconds: float
    runs: tuple[float, ...]


def timing_scan(ds: Dataset, sampler_ids: Sequence[str], sizes: Sequence[int],
                cfg: SamplerConfig | None = None, repeats: int = 3,
                n_folds: int = 5) -> list[TimingRow]:
    """Median sampling time per (sampler, size).

    Each size takes a stratified subset and times the sampler on the
    training split of its first fold, as a cross-validation run would.
    """
    cfg = cfg or SamplerConfig()
    if len(set(sampler_ids)) != len(sampler_ids):
        raise ValueError("duplicate sampler ids")
    for s in sampler_ids:
        if s not in SAMPLER_IDS:
            raise UnknownSamplerError(s)
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if sizes and max(sizes) > ds.n:
        raise ValueError(f"size {max(sizes)} exceeds dataset size {ds.n}")
    if repeats < 1:
        raise ValueError("repeats must be positive")
    rows = []
    for size in sizes:
        subset = stratified_subset(ds, size, cfg.seed)
        train, _ = stratified_folds(subset, n_folds, cfg.seed).split(subset, 0)
        for s in sampler_ids:
            runs = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                if s != "none":
                    transform(train, cfg, s)
                runs.append(time.perf_counter() - t0)
            rows.append(TimingRow(s, int(size), statistics.median(runs), tuple(runs)))
    order = {s: i for i, s in enumerate(sampler_ids)}
    return sorted(rows, key=lambda r: (order[r.sampler], r.size))


def project_time(rows: Sequence[TimingRow], sampler: str, target_size: int) -> float:
    """Least-squares line through (size, seconds) evaluated at ``target_size``."""
    pts = [(r.size, r.seconds) for r in rows if r.sampler == sampler]
    if not pts:
        raise ValueError(f"no timings for {sampler!r}")
    if len({x for x, _ in pts}) < 2:
        return pts[0][1] * target_size / pts[0][0]
    x, y = np.array(pts, dtype=np.float64).T
    slope, intercept = np.polyfit(x, y, 1)
    return float(intercept + slope * target_size)
