"""Combined cleaning and resampling.

Each minority row grows a sphere until its energy budget is spent, majority
rows caught inside are pushed out to the sphere's surface, and synthetic rows
are drawn in boxes around the minority rows, more of them around small spheres.
"""

from __future__ import annotations

import numpy as np

from ..neighbors import pairwise_distances
from .base import Problem, SyntheticBatch, allocate, expand

MAX_RADIUS_STEPS = 64
MAX_PUSH_ROUNDS = 64
_TOL = 1e-12


def find_radius(majority_distances: np.ndarray, energy: float) -> float:
    """Spend ``energy`` growing a sphere against sorted majority distances.

    Each step costs ``deltaR * NoP`` where NoP is one plus the number of
    majority rows within the new radius. A step that would swallow another
    majority row stops exactly at that row instead.
    """
    d = np.sort(np.asarray(majority_distances, dtype=np.float64))
    radius = 0.0
    for _ in range(MAX_RADIUS_STEPS):
        if energy <= _TOL:
            break
        inside = int(np.searchsorted(d, radius, side="right"))
        nop = inside + 1
        delta = energy / nop
        if np.searchsorted(d, radius + delta, side="right") + 1 > nop:
            delta = d[inside] - radius
        radius += delta
        energy -= delta * (int(np.searchsorted(d, radius, side="right")) + 1)
    return radius


def push_out(point: np.ndarray, center: np.ndarray, radius: float,
             fallback_direction: np.ndarray) -> np.ndarray:
    """Move ``point`` radially away from ``center`` onto the sphere of ``radius``."""
    offset = point - center
    dist = float(np.sqrt(offset @ offset))
    if dist == 0.0:
        norm = float(np.sqrt(fallback_direction @ fallback_direction)) or 1.0
        return center + fallback_direction / norm * radius
    return point + (radius - dist) / dist * offset


def push_clear(point: np.ndarray, center: np.ndarray, radius: float, centers: np.ndarray,
               radii: np.ndarray, fallback_direction: np.ndarray) -> np.ndarray:
    """Like :func:`push_out`, but keep walking along the ray until no sphere holds the point.

    The result lies on the surface of the last sphere it leaves.
    """
    offset = point - center
    norm = float(np.sqrt(offset @ offset))
    if norm == 0.0:
        offset = fallback_direction
        norm = float(np.sqrt(offset @ offset)) or 1.0
    u = offset / norm
    # ray center + t*u is inside sphere j for t in (t1, t2)
    w = center - centers
    b = w @ u
    disc = b * b - (np.einsum("ij,ij->i", w, w) - radii * radii)
    ok = disc > 0
    root = np.sqrt(np.where(ok, disc, 0.0))
    t1, t2 = -b - root, -b + root
    t = radius
    for _ in range(len(radii) + 1):
        hit = ok & (t1 < t) & (t < t2)
        if not hit.any():
            break
        t = float(t2[hit].max())
    return center + t * u


def compute_radii(p: Problem) -> np.ndarray:
    if not len(p.maj_pos):
        return np.full(p.m, p.cfg.energy)
    D = pairwise_distances(p.Xmin, p.Xmaj)
    return np.array([find_radius(row, p.cfg.energy) for row in D])


def relocate(p: Problem, radii: np.ndarray) -> dict[int, np.ndarray]:
    """New positions (by row_id) of majority rows caught inside minority spheres.

    A row inside several spheres takes one push chosen at random, preferring
    pushes that leave it outside every sphere. When no single push does, the
    row walks on along the push ray until it clears them all.
    """
    if not len(p.maj_pos):
        return {}
    centers = p.Xmin
    moved: dict[int, np.ndarray] = {}
    current = p.Xmaj.copy()
    active = np.arange(len(p.maj_pos))
    for rnd in range(MAX_PUSH_ROUNDS):
        D = pairwise_distances(current[active], centers)
        inside = D < radii[None, :] - 1e-9 * np.maximum(radii[None, :], 1.0)
        hit_rows = np.flatnonzero(inside.any(axis=1))
        if not len(hit_rows):
            break
        rows = active[hit_rows]
        u = p.uniforms(p.keys("push", p.maj_ids[rows], rnd), 1 + p.d)
        for r, j, draws in zip(rows, hit_rows, u):
            spheres = np.flatnonzero(inside[j])
            pushes = [push_out(current[r], centers[s], radii[s], draws[1:] - 0.5)
                      for s in spheres]
            clear = [i for i, x in enumerate(pushes)
                     if not np.any(pairwise_distances(x[None, :], centers)[0]
                                   < radii - 1e-9 * np.maximum(radii, 1.0))]
            if not clear:
                pushes = [push_clear(current[r], centers[s], radii[s], centers, radii,
                                     draws[1:] - 0.5) for s in spheres]
                clear = list(range(len(pushes)))
            pool = clear
            pick = pool[min(int(draws[0] * len(pool)), len(pool) - 1)]
            current[r] = pushes[pick]
            moved[int(p.maj_ids[r])] = current[r].copy()
        active = rows
    return moved


def ccr(p: Problem) -> SyntheticBatch:
    radii = compute_radii(p)
    moved = relocate(p, radii)
    with np.errstate(divide="ignore"):
        inverse = np.where(radii > 0, 1.0 / radii, 0.0)
    quotas = allocate(inverse, p.n_to_add, p.min_ids)
    owner, ordinal = expand(quotas)
    keys = p.pair_keys(p.min_ids[owner], ordinal)
    u = p.uniforms(keys, 2 * p.d)
    sign = np.where(u[:, :p.d] < 0.5, -1.0, 1.0)
    feats = p.Xmin[owner] + sign * u[:, p.d:] * radii[owner][:, None]
    recorded = {int(rid): float(r) for rid, r in zip(p.min_ids, radii)}
    return p.batch(feats, p.min_pos[owner], None, ordinal, relocated=moved, radii=recorded)
