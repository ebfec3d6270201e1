"""Radial-based oversampling: random-walk minority copies down the |phi| surface."""

from __future__ import annotations

import numpy as np

from ..parallel import chunk_bounds, pmap
from .base import Problem, SyntheticBatch, expand

_CHUNK_CELLS = 4_000_000


def _kernel_sum(points: np.ndarray, reference: np.ndarray, gamma: float) -> np.ndarray:
    """Sum over ``reference`` of exp(-(L1 distance / gamma)^2), per point."""
    out = np.zeros(len(points))
    if not len(reference) or not len(points):
        return out
    step = max(1, _CHUNK_CELLS // (len(reference) * points.shape[1]))

    def run(b):
        s, e = b
        l1 = np.abs(points[s:e, None, :] - reference[None, :, :]).sum(axis=2)
        return np.exp(-np.square(l1 / gamma)).sum(axis=1)

    parts = pmap(run, chunk_bounds(len(points), step))
    return np.concatenate(parts) if parts else out


def rbo_phi(points, majority, minority, gamma: float) -> np.ndarray:
    """Majority potential minus minority potential at each point."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return _kernel_sum(points, majority, gamma) - _kernel_sum(points, minority, gamma)


def stop_indices(p: Problem, keys: np.ndarray) -> np.ndarray:
    cfg = p.cfg
    n = len(keys)
    if cfg.rbo_stop_probability == 1.0:
        return np.full(n, cfg.rbo_iterations, dtype=np.int64)
    mean = cfg.rbo_iterations * cfg.rbo_stop_probability
    z = p.normals(keys, 1)[:, 0]
    return np.maximum(np.rint(mean + z * mean), 0).astype(np.int64)


def rbo(p: Problem) -> SyntheticBatch:
    cfg = p.cfg
    quotas = p.random_quotas(p.m, p.n_to_add)
    owner, ordinal = expand(quotas)
    keys = p.pair_keys(p.min_ids[owner], ordinal)
    point = p.Xmin[owner].copy()
    stops = stop_indices(p, keys)
    score = np.abs(rbo_phi(point, p.Xmaj, p.Xmin, cfg.rbo_gamma))
    d = p.d
    for i in range(int(stops.max(initial=0))):
        live = np.flatnonzero(stops > i)
        # counters 0-1 feed the stop index; iteration i uses the next 2d
        u = p.uniforms(keys[live], 2 * d, offset=2 + 2 * d * i)
        sign = np.where(u[:, :d] < 0.5, -1.0, 1.0)
        proposal = point[live] + sign * u[:, d:] * cfg.rbo_step_size
        new_score = np.abs(rbo_phi(proposal, p.Xmaj, p.Xmin, cfg.rbo_gamma))
        better = new_score < score[live]
        point[live[better]] = proposal[better]
        score[live[better]] = new_score[better]
    return p.batch(point, p.min_pos[owner], None, ordinal)
