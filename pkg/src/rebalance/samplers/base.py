"""Machinery shared by the samplers.

Randomness follows one pattern: when a sampler chooses bases at random it
draws them from streams keyed by draw index, turning them into per-base
quotas; every synthetic example is then a ``(base row_id, ordinal)`` pair
whose own stream supplies the partner choice, gap, and so on. Output rows
are sorted by ``(base row_id, ordinal)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset
from ..neighbors import NeighborModel
from ..rng import bounded_ints, derive_keys, normal_block, uniform_block
from .config import SamplerConfig


class EmptySeedSetError(RuntimeError):
    """The sampler's own filter left no minority instance to generate from."""


@dataclass(frozen=True)
class SyntheticBatch:
    """Synthetic rows for one minority class plus their provenance.

    ``partner_ids`` is -1 where a row has no partner (duplicates, CCR, RBO).
    ``relocated`` and ``radii`` are only filled by CCR.
    """

    features: np.ndarray
    label: int
    base_ids: np.ndarray
    partner_ids: np.ndarray
    method: str
    ordinals: np.ndarray | None = None
    relocated: dict[int, np.ndarray] = field(default_factory=dict)
    radii: dict[int, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.features)

    def digest(self) -> str:
        """Hash of the rows, provenance and relocations, for determinism checks."""
        h = hashlib.sha256()
        for arr in (self.features, self.base_ids, self.partner_ids):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(self.method.encode())
        for rid in sorted(self.relocated):
            h.update(np.int64(rid).tobytes())
            h.update(np.ascontiguousarray(self.relocated[rid]).tobytes())
        for rid in sorted(self.radii):
            h.update(np.float64(self.radii[rid]).tobytes())
        return h.hexdigest()


def allocate(weights, total: int, tie_keys=None) -> np.ndarray:
    """Integer quotas proportional to ``weights`` that sum exactly to ``total``.

    Floors the proportional shares, then hands the remainder out one by one
    by largest fractional part (ties: smallest ``tie_keys``). Non-positive or
    non-finite weight sums fall back to equal shares.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = len(w)
    if total < 0:
        raise ValueError("total must be non-negative")
    if n == 0:
        if total:
            raise EmptySeedSetError("no bases to allocate to")
        return np.zeros(0, dtype=np.int64)
    w = np.where(np.isfinite(w) & (w > 0), w, 0.0)
    s = w.sum()
    if not s > 0:
        w, s = np.ones(n), float(n)
    raw = w / s * total
    quotas = np.floor(raw).astype(np.int64)
    rem = int(total - quotas.sum())
    keys = np.arange(n) if tie_keys is None else np.asarray(tie_keys)
    order = np.lexsort((keys, -(raw - quotas)))
    while rem > 0:
        step = min(rem, n)
        quotas[order[:step]] += 1
        rem -= step
    return quotas


def expand(quotas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(owner index, ordinal)`` for every unit in ``quotas``."""
    quotas = np.asarray(quotas, dtype=np.int64)
    owner = np.repeat(np.arange(len(quotas)), quotas)
    starts = np.cumsum(quotas) - quotas
    ordinal = np.arange(len(owner)) - np.repeat(starts, quotas)
    return owner, ordinal


class Problem:
    """One call of a sampler: data, target class, count, config, and streams."""

    def __init__(self, ds: Dataset, label: int, n_to_add: int,
                 cfg: SamplerConfig, method: str):
        self.ds = ds
        self.label = int(label)
        self.n_to_add = int(n_to_add)
        self.cfg = cfg
        self.method = method
        is_min = ds.labels == label
        # row_id order makes results independent of the dataset's row order
        by_id = np.argsort(ds.row_ids, kind="stable")
        self.min_pos = by_id[is_min[by_id]]
        self.maj_pos = by_id[~is_min[by_id]]
        self.X = ds.features
        self.Xmin = ds.features[self.min_pos]
        self.Xmaj = ds.features[self.maj_pos]
        self.min_ids = ds.row_ids[self.min_pos]
        self.maj_ids = ds.row_ids[self.maj_pos]

    @property
    def m(self) -> int:
        return len(self.min_pos)

    @property
    def d(self) -> int:
        return self.ds.d

    def keys(self, *parts) -> np.ndarray:
        return derive_keys(self.method, self.label, *parts)

    def uniforms(self, keys: np.ndarray, n: int, offset: int = 0) -> np.ndarray:
        return uniform_block(self.cfg.seed, keys, n, offset)

    def normals(self, keys: np.ndarray, n: int, offset: int = 0) -> np.ndarray:
        return normal_block(self.cfg.seed, keys, n, offset)

    def pair_keys(self, base_ids: np.ndarray, ordinals: np.ndarray) -> np.ndarray:
        return self.keys(base_ids, ordinals)

    def model(self, points: np.ndarray, ids: np.ndarray) -> NeighborModel:
        return NeighborModel(points, self.cfg.neighbor_strategy, row_ids=ids)

    def random_quotas(self, n_pool: int, total: int, tag: str = "base",
                      probabilities: np.ndarray | None = None) -> np.ndarray:
        """Per-pool-member counts from ``total`` independent draws."""
        if total == 0:
            return np.zeros(n_pool, dtype=np.int64)
        if n_pool == 0:
            raise EmptySeedSetError("no bases to draw from")
        u = self.uniforms(self.keys(tag, np.arange(total)), 1)[:, 0]
        if probabilities is None:
            picks = bounded_ints(u, n_pool)
        else:
            cdf = np.cumsum(np.asarray(probabilities, dtype=np.float64))
            cdf /= cdf[-1]
            picks = np.minimum(np.searchsorted(cdf, u, side="right"), n_pool - 1)
        return np.bincount(picks, minlength=n_pool)

    def batch(self, features, base_pos, partner_pos=None, ordinals=None,
              relocated=None, radii=None) -> SyntheticBatch:
        """Assemble a batch from dataset positions, sorted by (base row_id, ordinal)."""
        features = np.asarray(features, dtype=np.float64).reshape(-1, self.d)
        base_ids = self.ds.row_ids[np.asarray(base_pos, dtype=np.int64)]
        if partner_pos is None:
            partner_ids = np.full(len(base_ids), -1, dtype=np.int64)
        else:
            partner_pos = np.asarray(partner_pos, dtype=np.int64)
            partner_ids = np.where(partner_pos >= 0,
                                   self.ds.row_ids[np.maximum(partner_pos, 0)], -1)
        if ordinals is None:
            ordinals = np.arange(len(base_ids))
        ordinals = np.asarray(ordinals, dtype=np.int64)
        order = np.lexsort((ordinals, base_ids))
        return SyntheticBatch(np.ascontiguousarray(features[order]), self.label,
                              base_ids[order], partner_ids[order], self.method,
                              ordinals[order], relocated or {}, radii or {})


def interpolate(base: np.ndarray, partner: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    return base + gaps[:, None] * (partner - base)


def minority_neighbors(problem: Problem, k: int,
                       query_pos: np.ndarray | None = None) -> list[np.ndarray]:
    """Up to k nearest minority neighbors (self excluded) as dataset positions.

    ``query_pos`` defaults to all minority rows.
    """
    model = problem.model(problem.Xmin, problem.min_ids)
    if query_pos is None:
        query_pos = problem.min_pos
    idx, _ = model.kneighbors(problem.X[query_pos], k + 1, problem.ds.row_ids[query_pos])
    return [problem.min_pos[row[1:]] for row in idx]


def pick_partners(problem: Problem, owner_pos: np.ndarray, ordinals: np.ndarray,
                  candidates: list[np.ndarray], owner_index: np.ndarray):
    """Uniform partner per pair from its owner's candidate list.

    Returns ``(partner positions or -1, per-pair stream keys)``. Owners
    without candidates get -1, meaning the base is duplicated.
    """
    keys = problem.pair_keys(problem.ds.row_ids[owner_pos], ordinals)
    u = problem.uniforms(keys, 1)[:, 0]
    sizes = np.array([len(c) for c in candidates], dtype=np.int64)
    n_cand = sizes[owner_index]
    pick = bounded_ints(u, np.maximum(n_cand, 1))
    partners = np.full(len(owner_pos), -1, dtype=np.int64)
    for j in np.flatnonzero(n_cand > 0):
        partners[j] = candidates[owner_index[j]][pick[j]]
    return partners, keys


def smote_generate(problem: Problem, bases: np.ndarray, quotas: np.ndarray,
                   candidates: list[np.ndarray], gaussian_sigma: float | None = None
                   ) -> SyntheticBatch:
    """Interpolate ``quotas[i]`` examples from ``bases[i]`` toward its candidates.

    ``bases`` are dataset positions, ``candidates[i]`` partner positions for
    ``bases[i]``. A base without candidates is duplicated.
    """
    owner, ordinal = expand(quotas)
    owner_pos = bases[owner]
    partners, keys = pick_partners(problem, owner_pos, ordinal, candidates, owner)
    if gaussian_sigma is None:
        gaps = problem.uniforms(keys, 1, offset=1)[:, 0]
    else:
        gaps = gaussian_sigma * problem.normals(keys, 1, offset=1)[:, 0]
    gaps = np.where(partners >= 0, gaps, 0.0)
    base_x = problem.X[owner_pos]
    partner_x = problem.X[np.where(partners >= 0, partners, owner_pos)]
    feats = interpolate(base_x, partner_x, gaps)
    return problem.batch(feats, owner_pos, partners, ordinal)
