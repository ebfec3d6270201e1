"""The fourteen oversamplers behind one interface, plus the one-vs-all transform."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import DataError, Dataset, class_counts
from ..rng import derive_keys, uniform_block
from . import ccr as _ccr
from . import rbo as _rbo
from . import smote_family as _sf
from .base import EmptySeedSetError, Problem, SyntheticBatch, allocate
from .config import SamplerConfig

log = logging.getLogger(__name__)

SAMPLERS: dict[str, Callable[[Problem], SyntheticBatch]] = {
    "adasyn": _sf.adasyn,
    "ans": _sf.ans,
    "borderline_smote": _sf.borderline_smote,
    "ccr": _ccr.ccr,
    "cluster_smote": _sf.cluster_smote,
    "gaussian_smote": _sf.gaussian_smote,
    "kmeans_smote": _sf.kmeans_smote,
    "mwmote": _sf.mwmote,
    "nras": _sf.nras,
    "random_oversample": _sf.random_oversample,
    "rbo": _rbo.rbo,
    "safe_level_smote": _sf.safe_level_smote,
    "smote": _sf.smote,
    "smote_d": _sf.smote_d,
}

# "none" is the identity sampler used for baseline rows
SAMPLER_IDS = ("none",) + tuple(SAMPLERS)

DISPLAY_NAMES = {
    "none": "None", "adasyn": "ADASYN", "ans": "ANS", "borderline_smote": "Borderline SMOTE",
    "ccr": "CCR", "cluster_smote": "Cluster SMOTE", "gaussian_smote": "Gaussian SMOTE",
    "kmeans_smote": "k-Means SMOTE", "mwmote": "MWMOTE", "nras": "NRAS",
    "random_oversample": "Random Oversampling", "rbo": "RBO",
    "safe_level_smote": "Safe Level SMOTE", "smote": "SMOTE", "smote_d": "SMOTE-D",
}


class UnknownSamplerError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"unknown sampler {name!r}; valid: {', '.join(SAMPLER_IDS)}")


def _check_sampler(sampler_id: str) -> None:
    if sampler_id not in SAMPLER_IDS:
        raise UnknownSamplerError(sampler_id)


def oversample(ds: Dataset, minority_label: int, n_to_add: int,
               cfg: SamplerConfig | None = None,
               sampler_id: str = "smote") -> SyntheticBatch:
    """``n_to_add`` synthetic rows for ``minority_label`` against all other rows.

    Raises :class:`EmptySeedSetError` when the sampler's own filter leaves no
    base. A minority class of one row falls back to duplication.
    """
    cfg = cfg or SamplerConfig()
    _check_sampler(sampler_id)
    if sampler_id == "none":
        raise ValueError("the identity sampler generates nothing")
    if n_to_add < 0:
        raise ValueError("n_to_add must be non-negative")
    if not np.any(ds.labels == minority_label):
        raise DataError(f"label {minority_label!r} has no rows")
    method = sampler_id
    m = int(np.sum(ds.labels == minority_label))
    if m < 2 and sampler_id != "random_oversample":
        log.warning("%s: minority class %s has %d row(s); duplicating instead",
                    sampler_id, minority_label, m)
        method = "random_oversample"
    p = Problem(ds, minority_label, n_to_add, cfg, method)
    if n_to_add == 0:
        return p.batch(np.empty((0, ds.d)), np.empty(0, dtype=np.int64))
    return SAMPLERS[method](p)


@dataclass(frozen=True)
class TransformResult:
    """Balanced dataset plus the per-class batches that produced it."""

    dataset: Dataset
    batches: tuple[SyntheticBatch, ...]
    fallbacks: tuple[int, ...] = field(default=())

    @property
    def relocated(self) -> dict[int, np.ndarray]:
        out: dict[int, np.ndarray] = {}
        for b in self.batches:
            out.update(b.relocated)
        return out


def _merge_relocations(batches, seed: int) -> dict[int, np.ndarray]:
    """One relocation per row; a row pushed by several class runs takes a random one."""
    by_row: dict[int, list[np.ndarray]] = {}
    for b in batches:
        for rid, x in b.relocated.items():
            by_row.setdefault(rid, []).append(x)
    if not by_row:
        return {}
    rids = np.array(sorted(by_row), dtype=np.int64)
    u = uniform_block(seed, derive_keys("ccr-merge", rids), 1)[:, 0]
    return {int(r): by_row[int(r)][min(int(x * len(by_row[int(r)])), len(by_row[int(r)]) - 1)]
            for r, x in zip(rids, u)}


def transform_detailed(ds: Dataset, cfg: SamplerConfig | None = None,
                       sampler_id: str = "smote",
                       first_row_id: int | None = None) -> TransformResult:
    """Bring every class up to the majority count (one-vs-all per class).

    Synthetic row_ids are numbered from ``first_row_id`` (default: one past
    the largest existing row_id), class by class in label order. A sampler
    whose filter leaves no seed falls back to random oversampling for that
    class, with a warning.
    """
    cfg = cfg or SamplerConfig()
    _check_sampler(sampler_id)
    counts = class_counts(ds)
    if len(counts) < 2:
        raise DataError("nothing to balance: dataset has fewer than two classes")
    target = max(c.count for c in counts)
    if sampler_id == "none":
        return TransformResult(ds, ())
    batches, fallbacks = [], []
    for c in counts:
        need = target - c.count
        if need == 0:
            continue
        try:
            batch = oversample(ds, c.label, need, cfg, sampler_id)
        except EmptySeedSetError as exc:
            log.warning("%s: %s for class %s; falling back to random oversampling",
                        sampler_id, exc, ds.label_text(c.label))
            batch = oversample(ds, c.label, need, cfg, "random_oversample")
            fallbacks.append(c.label)
        batches.append(batch)
    moved = _merge_relocations(batches, cfg.seed)
    features = ds.features
    if moved:
        features = features.copy()
        pos = ds.positions(np.fromiter(moved, dtype=np.int64))
        features[pos] = np.vstack(list(moved.values()))
    start = int(ds.row_ids.max(initial=-1)) + 1 if first_row_id is None else int(first_row_id)
    n_new = sum(len(b) for b in batches)
    if n_new == 0:
        out = ds.with_features(features) if moved else ds
        return TransformResult(out, tuple(batches), tuple(fallbacks))
    syn_x = np.vstack([b.features for b in batches])
    syn_y = np.concatenate([np.full(len(b), b.label, dtype=ds.labels.dtype) for b in batches])
    out = Dataset(np.vstack([features, syn_x]), np.concatenate([ds.labels, syn_y]),
                  np.concatenate([ds.row_ids, np.arange(start, start + n_new)]),
                  ds.feature_names, ds.classes, ds.label_name)
    return TransformResult(out, tuple(batches), tuple(fallbacks))


def transform(ds: Dataset, cfg: SamplerConfig | None = None, sampler_id: str = "smote",
              first_row_id: int | None = None) -> Dataset:
    return transform_detailed(ds, cfg, sampler_id, first_row_id).dataset


__all__ = [
    "DISPLAY_NAMES", "EmptySeedSetError", "SAMPLERS", "SAMPLER_IDS", "SamplerConfig",
    "SyntheticBatch", "TransformResult", "UnknownSamplerError", "allocate", "oversample",
    "transform", "transform_detailed",
]
