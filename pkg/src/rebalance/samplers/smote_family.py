"""Interpolation-based samplers and random duplication."""

from __future__ import annotations

import math

import numpy as np

from ..mlprims import kmeans_assign, kmeans_fit, propensity_scores
from ..neighbors import pairwise_distances, pairwise_sq_distances
from ..rng import RandomStream, bounded_ints
from .base import (EmptySeedSetError, Problem, SyntheticBatch, allocate, expand,
                   minority_neighbors, smote_generate)


def _full_neighbors(p: Problem, k: int, features: np.ndarray | None = None):
    """k nearest over the whole dataset for each minority row, self dropped.

    Returns dataset positions, shape ``(m, <=k)``.
    """
    X = p.X if features is None else features
    model = p.model(X, p.ds.row_ids)
    idx, _ = model.kneighbors(X[p.min_pos], k + 1, p.min_ids)
    return idx[:, 1:]


def _stream(p: Problem, tag: str) -> RandomStream:
    return RandomStream.for_task(p.cfg.seed, p.method, p.label, tag)


def random_oversample(p: Problem) -> SyntheticBatch:
    quotas = p.random_quotas(p.m, p.n_to_add)
    owner, ordinal = expand(quotas)
    pos = p.min_pos[owner]
    return p.batch(p.X[pos], pos, None, ordinal)


def smote(p: Problem) -> SyntheticBatch:
    cands = minority_neighbors(p, p.cfg.k)
    return smote_generate(p, p.min_pos, p.random_quotas(p.m, p.n_to_add), cands)


def gaussian_smote(p: Problem) -> SyntheticBatch:
    cands = minority_neighbors(p, p.cfg.k)
    return smote_generate(p, p.min_pos, p.random_quotas(p.m, p.n_to_add), cands,
                          gaussian_sigma=p.cfg.sigma)


def smote_d(p: Problem) -> SyntheticBatch:
    """Deterministic: quotas follow neighbor-distance spread, then distance share."""
    model = p.model(p.Xmin, p.min_ids)
    idx, dist = model.kneighbors(p.Xmin, p.cfg.k + 1, p.min_ids)
    idx, dist = idx[:, 1:], dist[:, 1:]
    if idx.shape[1] == 0:
        raise EmptySeedSetError("no minority neighbors")
    base_q = allocate(dist.std(axis=1), p.n_to_add, p.min_ids)
    feats, bases, partners, ordinals = [], [], [], []
    for i in np.flatnonzero(base_q):
        per_nb = allocate(dist[i], int(base_q[i]), p.min_ids[idx[i]])
        base_x = p.Xmin[i]
        o = 0
        for j in np.flatnonzero(per_nb):
            m = int(per_nb[j])
            frac = np.arange(1, m + 1) / m
            feats.append(base_x + frac[:, None] * (p.Xmin[idx[i, j]] - base_x))
            bases.append(np.full(m, p.min_pos[i]))
            partners.append(np.full(m, p.min_pos[idx[i, j]]))
            ordinals.append(np.arange(o, o + m))
            o += m
    if not feats:
        return p.batch(np.empty((0, p.d)), np.empty(0, int), np.empty(0, int))
    return p.batch(np.vstack(feats), np.concatenate(bases), np.concatenate(partners),
                   np.concatenate(ordinals))


def adasyn(p: Problem) -> SyntheticBatch:
    nb = _full_neighbors(p, p.cfg.k)
    is_min = p.ds.labels[nb] == p.label
    ratio = (~is_min).sum(axis=1)
    quotas = allocate(ratio, p.n_to_add, p.min_ids)
    cands = [row[mask] for row, mask in zip(nb, is_min)]
    return smote_generate(p, p.min_pos, quotas, cands)


def danger_mask(p: Problem) -> np.ndarray:
    """Minority rows with between k/2 and k-1 majority rows among their k neighbors."""
    nb = _full_neighbors(p, p.cfg.k)
    k = nb.shape[1]
    majority = (p.ds.labels[nb] != p.label).sum(axis=1)
    return (k / 2 <= majority) & (majority < k)


def borderline_smote(p: Problem) -> SyntheticBatch:
    danger = danger_mask(p)
    if not danger.any():
        raise EmptySeedSetError("no danger examples")
    bases = p.min_pos[danger]
    cands = minority_neighbors(p, p.cfg.k, bases)
    quotas = allocate(np.ones(len(bases)), p.n_to_add, p.min_ids[danger])
    return smote_generate(p, bases, quotas, cands)


def safe_levels(p: Problem) -> np.ndarray:
    """Minority count among the k nearest (full data) of every minority row."""
    nb = _full_neighbors(p, p.cfg.k)
    return (p.ds.labels[nb] == p.label).sum(axis=1)


def safe_level_gap_interval(sl_p: int, sl_n: int):
    """``(low, high)`` gap bounds of the branch; ``None`` means discard the draw."""
    if sl_n == 0:
        return None if sl_p == 0 else (0.0, 0.0)
    ratio = sl_p / sl_n
    if ratio == 1:
        return (0.0, 1.0)
    if ratio > 1:
        return (0.0, 1.0 / ratio)
    return (1.0 - ratio, 1.0)


def safe_level_smote(p: Problem) -> SyntheticBatch:
    """Attempts are drawn until ``n_to_add`` survive or the budget runs out.

    The budget is ``ceil(n_to_add * (1 + correction rate))`` attempts; any
    shortfall is filled by duplicating random minority rows with a nonzero
    safe level.
    """
    level = safe_levels(p)
    cands = minority_neighbors(p, p.cfg.k)
    local = {int(pos): i for i, pos in enumerate(p.min_pos)}
    cand_local = [np.array([local[int(c)] for c in row], dtype=np.int64) for row in cands]
    sizes = np.array([len(c) for c in cands])
    budget = math.ceil(p.n_to_add * (1.0 + p.cfg.safe_level_correction_rate))
    attempts = np.arange(budget)
    u = p.uniforms(p.keys("attempt", attempts), 3)
    owner = bounded_ints(u[:, 0], p.m)
    pick = bounded_ints(u[:, 1], np.maximum(sizes[owner], 1))
    partner = np.array([cand_local[o][j] if sizes[o] else -1 for o, j in zip(owner, pick)],
                       dtype=np.int64)
    sl_p = level[owner]
    sl_n = np.where(partner >= 0, level[np.maximum(partner, 0)], 0)
    infinite = sl_n == 0
    ratio = sl_p / np.maximum(sl_n, 1)
    lo = np.where(~infinite & (ratio < 1), 1.0 - ratio, 0.0)
    hi = np.where(infinite, 0.0, 1.0)
    hi = np.where(~infinite & (ratio > 1), 1.0 / np.maximum(ratio, 1.0), hi)
    # a zero ratio leaves the empty interval [1, 1); the gap is then 1
    gap = np.where(hi > lo, lo + u[:, 2] * (hi - lo), lo)
    accepted = np.flatnonzero(~(infinite & (sl_p == 0)))[:p.n_to_add]
    base_pos = p.min_pos[owner[accepted]]
    has_partner = ~infinite[accepted]
    partner_pos = np.where(has_partner, p.min_pos[np.maximum(partner[accepted], 0)], -1)
    target = p.X[np.where(has_partner, partner_pos, base_pos)]
    g = gap[accepted]
    feats = p.X[base_pos] + g[:, None] * (target - p.X[base_pos])
    ordinals = attempts[accepted]
    short = p.n_to_add - len(accepted)
    if short:
        safe = p.min_pos[level > 0]
        if not len(safe):
            raise EmptySeedSetError("no minority example has a nonzero safe level")
        fill_u = p.uniforms(p.keys("fill", np.arange(short)), 1)[:, 0]
        fill = safe[bounded_ints(fill_u, len(safe))]
        feats = np.vstack([feats, p.X[fill]])
        base_pos = np.concatenate([base_pos, fill])
        partner_pos = np.concatenate([partner_pos, np.full(short, -1)])
        ordinals = np.concatenate([ordinals, budget + np.arange(short)])
    return p.batch(feats, base_pos, partner_pos, ordinals)


def _within_group_neighbors(p: Problem, members: np.ndarray, k: int) -> list[np.ndarray]:
    """k nearest among ``members`` (dataset positions) for each member, self dropped."""
    model = p.model(p.X[members], p.ds.row_ids[members])
    idx, _ = model.kneighbors(p.X[members], k + 1, p.ds.row_ids[members])
    return [members[row[1:]] for row in idx]


def cluster_smote(p: Problem) -> SyntheticBatch:
    model = kmeans_fit(p.Xmin, p.cfg.clusters_for("cluster_smote"),
                       p.cfg.kmeans_max_iterations, _stream(p, "kmeans"))
    ids = kmeans_assign(model, p.Xmin)
    clusters = [np.flatnonzero(ids == c) for c in range(model.k)]
    clusters = [c for c in clusters if len(c)]
    cands: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * p.m
    for members in clusters:
        for i, nb in zip(members, _within_group_neighbors(p, p.min_pos[members], p.cfg.k)):
            cands[i] = nb
    u = p.uniforms(p.keys("base", np.arange(p.n_to_add)), 2)
    cluster = bounded_ints(u[:, 0], len(clusters))
    sizes = np.array([len(c) for c in clusters])
    member = bounded_ints(u[:, 1], sizes[cluster])
    picks = np.array([clusters[c][j] for c, j in zip(cluster, member)], dtype=np.int64)
    quotas = np.bincount(picks, minlength=p.m)
    return smote_generate(p, p.min_pos, quotas, cands)


def cluster_sparsity(X: np.ndarray, exponent: float) -> float:
    """Mean pairwise distance raised to ``exponent``, over the member count."""
    mc = len(X)
    if mc < 2:
        return 0.0
    avg = pairwise_distances(X, X).sum() / (mc * mc)
    if avg <= 0:
        return 0.0
    return math.exp(exponent * math.log(avg) - math.log(mc))


def imbalance_ratio(n_majority: int, n_minority: int) -> float:
    return (n_majority + 1) / (n_minority + 1)


def kmeans_smote(p: Problem) -> SyntheticBatch:
    cfg = p.cfg
    # seeding picks rows by position, so fit in row_id order
    by_id = np.argsort(p.ds.row_ids, kind="stable")
    model = kmeans_fit(p.X[by_id], cfg.clusters_for("kmeans_smote"),
                       cfg.kmeans_max_iterations, _stream(p, "kmeans"))
    ids = kmeans_assign(model, p.X)
    de = p.d if cfg.density_exponent_de is None else cfg.density_exponent_de
    kept, weights = [], []
    for c in range(model.k):
        in_c = ids == c
        members = p.min_pos[in_c[p.min_pos]]
        n_maj = int(in_c.sum()) - len(members)
        if len(members) and imbalance_ratio(n_maj, len(members)) < cfg.imbalance_threshold_irt:
            kept.append(members)
            weights.append(cluster_sparsity(p.X[members], de))
    if not kept:
        raise EmptySeedSetError("no cluster passes the imbalance filter")
    cluster_q = allocate(weights, p.n_to_add)
    index_of = {int(pos): i for i, pos in enumerate(p.min_pos)}
    quotas = np.zeros(p.m, dtype=np.int64)
    cands: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * p.m
    for c, members in enumerate(kept):
        local = np.array([index_of[int(x)] for x in members])
        for i, nb in zip(local, _within_group_neighbors(p, members, cfg.k)):
            cands[i] = nb
        if cluster_q[c]:
            u = p.uniforms(p.keys("base", c, np.arange(cluster_q[c])), 1)[:, 0]
            quotas += np.bincount(local[bounded_ints(u, len(local))], minlength=p.m)
    return smote_generate(p, p.min_pos, quotas, cands)


def nras_kept(p: Problem) -> np.ndarray:
    """Mask over minority rows that survive the noise filter."""
    cfg = p.cfg
    by_id = np.argsort(p.ds.row_ids, kind="stable")
    score = np.empty(p.ds.n)
    score[by_id] = propensity_scores(p.ds.take(by_id), p.label)
    augmented = np.hstack([p.X, score[:, None]])
    nb = _full_neighbors(p, cfg.k, augmented)
    keep = (p.ds.labels[nb] == p.label).sum(axis=1) >= cfg.nras_threshold
    if cfg.nras_propensity_floor is not None:
        keep &= score[p.min_pos] >= cfg.nras_propensity_floor
    return keep


def nras(p: Problem) -> SyntheticBatch:
    keep = nras_kept(p)
    if not keep.any():
        raise EmptySeedSetError("every minority example was filtered as noise")
    bases = p.min_pos[keep]
    cands = minority_neighbors(p, p.cfg.k, bases)
    quotas = allocate(np.ones(len(bases)), p.n_to_add, p.min_ids[keep])
    return smote_generate(p, bases, quotas, cands)


def ans_outcast_threshold(out_border: np.ndarray, c_max: float) -> int:
    """First c whose outcast total repeats the previous one, with a usable base."""
    previous = -1
    chosen = None
    for c in range(1, int(c_max) + 1):
        outcasts = int(out_border[out_border >= c].sum())
        if outcasts == previous:
            chosen = c
            if (out_border < c).any():
                return c
        previous = outcasts
    return chosen if chosen is not None and (out_border < chosen).any() else int(c_max) + 1


def ans_state(p: Problem):
    """``(closest minority distance, outBorder count, C)`` per minority row."""
    cfg = p.cfg
    model = p.model(p.Xmin, p.min_ids)
    _, dist = model.kneighbors(p.Xmin, 2, p.min_ids)
    closest = dist[:, 1]
    if len(p.maj_pos):
        maj_model = p.model(p.Xmaj, p.maj_ids)
        out_border = np.minimum(maj_model.radius_counts(p.Xmin, closest, strict=True),
                                cfg.radius_neighbor_cap)
    else:
        out_border = np.zeros(p.m, dtype=np.int64)
    c_max = p.ds.n * cfg.c_max_ratio
    return closest, out_border, ans_outcast_threshold(out_border, c_max)


def ans(p: Problem) -> SyntheticBatch:
    closest, out_border, C = ans_state(p)
    used = out_border < C
    if not used.any():
        raise EmptySeedSetError("every minority example is an outcast")
    bases = p.min_pos[used]
    radius = float(closest[used].max())
    model = p.model(p.X[bases], p.ds.row_ids[bases])
    found = model.radius_neighbors(p.X[bases], radius, p.cfg.radius_neighbor_cap,
                                   p.ds.row_ids[bases])
    cands = [bases[idx[1:]] for idx, _, _ in found]
    counts = np.array([len(c) for c in cands], dtype=np.float64)
    quotas = allocate(counts, p.n_to_add, p.min_ids[used])
    return smote_generate(p, bases, quotas, cands)


def mwmote_cf(sq_dist: np.ndarray, d: int, cf_th: float, cmax: float) -> np.ndarray:
    """Closeness factor from squared distances, clipped at ``cf_th``."""
    with np.errstate(divide="ignore"):
        inv = d / np.asarray(sq_dist, dtype=np.float64)
    return np.minimum(inv, cf_th) / cf_th * cmax


def mwmote_sets(p: Problem):
    """``(Sminf mask over minority rows, Sbmaj positions, Simin positions)``.

    Sminf drops minority rows without a minority row among their k1
    neighbors, Sbmaj are the k2 nearest majority rows of Sminf, and Simin
    the k3 nearest minority rows of Sbmaj.
    """
    cfg = p.cfg
    nb = _full_neighbors(p, cfg.k1)
    filtered = (p.ds.labels[nb] == p.label).any(axis=1)
    if not filtered.any() or not len(p.maj_pos):
        raise EmptySeedSetError("no informative minority examples")
    maj_model = p.model(p.Xmaj, p.maj_ids)
    idx, _ = maj_model.kneighbors(p.Xmin[filtered], cfg.k2)
    border_maj = p.maj_pos[np.unique(idx)]
    min_model = p.model(p.Xmin, p.min_ids)
    idx, _ = min_model.kneighbors(p.X[border_maj], cfg.k3)
    return filtered, border_maj, p.min_pos[np.unique(idx)]


def mwmote_weights(p: Problem):
    """``(Simin dataset positions, selection probabilities)``."""
    cfg = p.cfg
    _, border_maj, informative = mwmote_sets(p)
    cf = mwmote_cf(pairwise_sq_distances(p.X[border_maj], p.X[informative]),
                   p.d, cfg.mwmote_cf_th, cfg.mwmote_cmax)
    df = cf / cf.sum(axis=1, keepdims=True)
    sw = (cf * df).sum(axis=0)
    total = sw.sum()
    sp = sw / total if total > 0 else np.full(len(sw), 1.0 / len(sw))
    return informative, sp


def mwmote(p: Problem) -> SyntheticBatch:
    cfg = p.cfg
    informative, sp = mwmote_weights(p)
    model = kmeans_fit(p.Xmin, cfg.clusters_for("mwmote"), cfg.kmeans_max_iterations,
                       _stream(p, "kmeans"))
    cluster = kmeans_assign(model, p.Xmin)
    pos_cluster = dict(zip(p.min_pos.tolist(), cluster.tolist()))
    cands = [p.min_pos[cluster == pos_cluster[int(b)]] for b in informative]
    quotas = p.random_quotas(len(informative), p.n_to_add, probabilities=sp)
    return smote_generate(p, informative, quotas, cands)
