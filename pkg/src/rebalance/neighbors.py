"""Exact Euclidean nearest-neighbor search.

Two strategies answer the same queries: a chunked brute-force scan and a
ball tree. Both compute distances with :func:`pairwise_distances`, which
accumulates squared differences one coordinate at a time, so a given pair
gets a bit-identical distance from either path and the ordering contract
(distance, then row_id) yields identical lists.

A query row whose row_id is in the reference set is always reported first,
with distance 0, even when duplicates with smaller row_ids exist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import instrument
from .core import Dataset
from .parallel import chunk_bounds, pmap

STRATEGIES = ("brute_force", "metric_tree", "auto")
# below this many reference rows the vectorised scan beats the tree in numpy
AUTO_TREE_THRESHOLD = 20000
_SELF = -1.0


class InsufficientNeighborsError(ValueError):
    """Reference set too small to provide a partner for interpolation."""


def pairwise_sq_distances(Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    out = np.zeros((Q.shape[0], R.shape[0]))
    for j in range(Q.shape[1]):
        diff = Q[:, j, None] - R[None, :, j]
        out += diff * diff
    return out


def pairwise_distances(Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    return np.sqrt(pairwise_sq_distances(Q, R))


def pairwise_sq_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared distance between matching rows, same accumulation order."""
    out = np.zeros(A.shape[0])
    for j in range(A.shape[1]):
        diff = A[:, j] - B[:, j]
        out += diff * diff
    return out


@dataclass(frozen=True)
class NeighborList:
    """Neighbors of one query, nearest first (ties by row_id)."""

    query_row_id: int
    row_ids: np.ndarray
    distances: np.ndarray
    truncated: bool = False

    @property
    def neighbors(self) -> list[tuple[int, float]]:
        return [(int(r), float(d)) for r, d in zip(self.row_ids, self.distances)]

    @property
    def head(self) -> tuple[int, float]:
        return int(self.row_ids[0]), float(self.distances[0])

    @property
    def tail(self) -> list[tuple[int, float]]:
        return self.neighbors[1:]

    def __len__(self) -> int:
        return len(self.row_ids)


class _BallTree:
    def __init__(self, points: np.ndarray, leaf_size: int):
        n = len(points)
        perm = np.arange(n)
        starts, ends, centers, radii = [], [], [], []
        left, right, split_dim, split_val = [], [], [], []

        def new_node(s, e):
            idx = perm[s:e]
            pts = points[idx]
            center = pts.mean(axis=0)
            radius = float(pairwise_distances(center[None, :], pts).max()) if e > s else 0.0
            starts.append(s); ends.append(e)
            centers.append(center); radii.append(radius)
            left.append(-1); right.append(-1)
            split_dim.append(0); split_val.append(0.0)
            return len(starts) - 1

        stack = [new_node(0, n)]
        while stack:
            node = stack.pop()
            s, e = starts[node], ends[node]
            if e - s <= leaf_size:
                continue
            idx = perm[s:e]
            pts = points[idx]
            spread = pts.max(axis=0) - pts.min(axis=0)
            dim = int(np.argmax(spread))
            if spread[dim] == 0.0:
                continue
            mid = (e - s) // 2
            order = np.argsort(pts[:, dim], kind="stable")
            perm[s:e] = idx[order]
            split_dim[node] = dim
            split_val[node] = float(points[perm[s + mid - 1], dim])
            l_node = new_node(s, s + mid)
            r_node = new_node(s + mid, e)
            left[node], right[node] = l_node, r_node
            stack.extend((l_node, r_node))

        self.perm = perm
        self.start = np.array(starts)
        self.end = np.array(ends)
        self.center = np.array(centers).reshape(len(starts), points.shape[1])
        self.radius = np.array(radii)
        self.left = np.array(left)
        self.right = np.array(right)
        self.split_dim = np.array(split_dim)
        self.split_val = np.array(split_val)

    def leaf_of(self, Q: np.ndarray) -> np.ndarray:
        node = np.zeros(len(Q), dtype=np.int64)
        active = self.left[node] >= 0
        while active.any():
            ids = np.flatnonzero(active)
            cur = node[ids]
            go_left = Q[ids, self.split_dim[cur]] <= self.split_val[cur]
            node[ids] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.left[node] >= 0
        return node

    def lower_bounds(self, node: int, Q: np.ndarray) -> np.ndarray:
        dist = pairwise_distances(Q, self.center[node][None, :])[:, 0]
        return dist - self.radius[node]


def _margin(x: np.ndarray) -> np.ndarray:
    return 1e-9 * (1.0 + np.abs(x))


class NeighborModel:
    """Fitted reference set for k-NN and radius queries.

    Indices returned by :meth:`kneighbors` and :meth:`radius_neighbors` are
    positions in the reference array as passed in.
    """

    def __init__(self, reference: Dataset | np.ndarray, strategy: str = "auto",
                 leaf_size: int = 40, row_ids: np.ndarray | None = None):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        if leaf_size < 1:
            raise ValueError("leaf_size must be positive")
        if isinstance(reference, Dataset):
            points, ids = reference.features, reference.row_ids
        else:
            points = np.asarray(reference, dtype=np.float64)
            ids = np.arange(len(points)) if row_ids is None else np.asarray(row_ids)
        self._order = np.argsort(ids, kind="stable")
        self.points = np.ascontiguousarray(points[self._order])
        self.row_ids = np.asarray(ids)[self._order]
        self._norms = np.einsum("ij,ij->i", self.points, self.points)
        if strategy == "auto":
            strategy = ("metric_tree" if len(self.points) > AUTO_TREE_THRESHOLD
                        else "brute_force")
        self.strategy = strategy
        self.leaf_size = leaf_size
        self._tree = (_BallTree(self.points, leaf_size)
                      if strategy == "metric_tree" and len(self.points) else None)
        instrument.bump("knn_fit")

    @property
    def size(self) -> int:
        return len(self.points)

    def _self_columns(self, query_ids: np.ndarray | None) -> np.ndarray | None:
        """Sorted-reference column of each query's own row, or -1."""
        if query_ids is None or not self.size:
            return None
        query_ids = np.asarray(query_ids)
        pos = np.searchsorted(self.row_ids, query_ids)
        pos_c = np.minimum(pos, self.size - 1)
        return np.where(self.row_ids[pos_c] == query_ids, pos_c, -1)

    def _check(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if not self.size:
            raise ValueError("empty reference set")
        if X.shape[1] != self.points.shape[1]:
            raise ValueError("query dimension does not match reference")
        return X

    # -- k nearest ------------------------------------------------------------

    def kneighbors(self, X, n_neighbors: int, query_ids=None):
        """``(indices, distances)`` of the ``min(n_neighbors, size)`` nearest.

        ``n_neighbors`` counts the self entry; callers wanting k genuine
        neighbors ask for k + 1.
        """
        X = self._check(X)
        if n_neighbors < 1:
            raise ValueError("k must be positive")
        instrument.bump("knn_query", len(X))
        kk = min(int(n_neighbors), self.size)
        selfcol = self._self_columns(query_ids)
        if self._tree is None:
            parts = pmap(lambda b: self._brute_knn(X[b[0]:b[1]], kk, None if selfcol is None
                                                   else selfcol[b[0]:b[1]]),
                         chunk_bounds(len(X), max(1, 2_000_000 // max(self.size, 1))))
            idx = np.vstack([p[0] for p in parts]) if parts else np.empty((0, kk), int)
            dist = np.vstack([p[1] for p in parts]) if parts else np.empty((0, kk))
        else:
            idx, dist = self._tree_knn(X, kk, selfcol)
        dist = np.where(dist == _SELF, 0.0, dist)
        return self._order[idx], dist

    def _screen(self, Q):
        """Cheap squared distances plus a bound on their rounding error."""
        qn = np.einsum("ij,ij->i", Q, Q)
        approx = qn[:, None] + self._norms[None, :] - 2.0 * (Q @ self.points.T)
        tol = 1e-9 * (qn[:, None] + self._norms[None, :] + 1e-300)
        return approx, tol

    def _exact_pairs(self, Q, rows, cols, selfcol):
        d = np.sqrt(pairwise_sq_rows(Q[rows], self.points[cols]))
        if selfcol is not None:
            d[selfcol[rows] == cols] = _SELF
        return d

    def _brute_knn(self, Q, kk, selfcol):
        approx, tol = self._screen(Q)
        if selfcol is not None:
            rows = np.flatnonzero(selfcol >= 0)
            approx[rows, selfcol[rows]] = -np.inf
        if kk >= self.size:
            mask = np.ones_like(approx, dtype=bool)
        else:
            thresh = np.partition(approx, kk - 1, axis=1)[:, kk - 1]
            mask = approx <= thresh[:, None] + tol.max(axis=1, keepdims=True)
        rows, cols = np.nonzero(mask)
        d = self._exact_pairs(Q, rows, cols, selfcol)
        order = np.lexsort((cols, d, rows))
        rows, cols, d = rows[order], cols[order], d[order]
        starts = np.searchsorted(rows, np.arange(len(Q)))
        take = starts[:, None] + np.arange(kk)[None, :]
        return cols[take], d[take]

    def _tree_knn(self, X, kk, selfcol):
        tree = self._tree
        leaves = tree.leaf_of(X)
        order = np.lexsort((np.arange(len(X)), leaves))
        groups = []
        for s, e in chunk_bounds(len(order), 64):
            g = order[s:e]
            # a chunk may straddle leaves; split it so each group is local
            for leaf in np.unique(leaves[g]):
                groups.append(g[leaves[g] == leaf])

        def run(g):
            return g, self._tree_knn_group(X[g], kk, None if selfcol is None else selfcol[g])

        idx = np.empty((len(X), kk), dtype=np.int64)
        dist = np.empty((len(X), kk))
        for g, (gi, gd) in pmap(run, groups):
            idx[g], dist[g] = gi, gd
        return idx, dist

    def _tree_knn_group(self, Q, kk, selfcol):
        tree = self._tree
        g = len(Q)
        best_d = np.full((g, kk), np.inf)
        best_i = np.full((g, kk), self.size, dtype=np.int64)
        centroid = Q.mean(axis=0)[None, :]
        stack = [0]
        while stack:
            node = stack.pop()
            kth = best_d[:, -1]
            lb = tree.lower_bounds(node, Q)
            if np.all(lb > kth + _margin(kth)):
                continue
            l, r = tree.left[node], tree.right[node]
            if l < 0:
                cols = tree.perm[tree.start[node]:tree.end[node]]
                D = pairwise_distances(Q, self.points[cols])
                if selfcol is not None:
                    hit = selfcol[:, None] == cols[None, :]
                    D[hit] = _SELF
                cand_d = np.hstack([best_d, D])
                cand_i = np.hstack([best_i, np.broadcast_to(cols, D.shape)])
                o = np.lexsort((cand_i, cand_d), axis=1)[:, :kk]
                best_d = np.take_along_axis(cand_d, o, axis=1)
                best_i = np.take_along_axis(cand_i, o, axis=1)
                continue
            dl = pairwise_distances(centroid, tree.center[l][None, :])[0, 0]
            dr = pairwise_distances(centroid, tree.center[r][None, :])[0, 0]
            # push the farther child first so the nearer one is explored first
            stack.extend((l, r) if dl > dr else (r, l))
        return best_i, best_d

    # -- radius ------------------------------------------------------------

    def radius_neighbors(self, X, radius, max_neighbors: int | None = None,
                         query_ids=None):
        """Per query: ``(indices, distances, truncated)`` within ``radius``.

        ``radius`` may be a scalar or one radius per query row.
        """
        X = self._check(X)
        radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), (len(X),))
        if np.any(np.isnan(radius)) or np.any(radius < 0):
            raise ValueError("radius must be non-negative")
        if max_neighbors is not None and max_neighbors < 1:
            raise ValueError("max_neighbors must be positive")
        instrument.bump("radius_query", len(X))
        selfcol = self._self_columns(query_ids)
        if self._tree is None and max_neighbors is not None and max_neighbors < self.size:
            return self._brute_capped_radius(X, radius, max_neighbors, selfcol)
        if self._tree is None:
            def run(b):
                s, e = b
                return self._brute_radius(X[s:e], radius[s:e],
                                          None if selfcol is None else selfcol[s:e])
            found = [c for part in pmap(run, chunk_bounds(
                len(X), max(1, 2_000_000 // max(self.size, 1)))) for c in part]
        else:
            found = self._tree_radius(X, radius, selfcol)
        out = []
        for cols, d in found:
            o = np.lexsort((cols, d))
            cols, d = cols[o], d[o]
            truncated = max_neighbors is not None and len(cols) > max_neighbors
            if truncated:
                cols, d = cols[:max_neighbors], d[:max_neighbors]
            out.append((self._order[cols], np.where(d == _SELF, 0.0, d), truncated))
        return out

    def _brute_capped_radius(self, X, radius, cap, selfcol):
        # the capped answer is a prefix of the (cap + 1)-NN list, which also
        # tells whether anything was cut off
        kk = cap + 1
        parts = pmap(lambda b: self._brute_knn(X[b[0]:b[1]], kk, None if selfcol is None
                                               else selfcol[b[0]:b[1]]),
                     chunk_bounds(len(X), max(1, 2_000_000 // self.size)))
        idx = np.vstack([p[0] for p in parts]) if parts else np.empty((0, kk), int)
        dist = np.vstack([p[1] for p in parts]) if parts else np.empty((0, kk))
        within = (dist <= radius[:, None]).sum(axis=1)
        truncated = within > cap
        within = np.minimum(within, cap)
        orig = self._order[idx]
        dist = np.where(dist == _SELF, 0.0, dist)
        return [(orig[i, :w], dist[i, :w], bool(t))
                for i, (w, t) in enumerate(zip(within, truncated))]

    def radius_counts(self, X, radius, strict: bool = False) -> np.ndarray:
        """Number of reference points within ``radius`` of each query row.

        With ``strict`` only points at distance strictly below the radius
        count. Cheaper than :meth:`radius_neighbors` when lists are not needed.
        """
        X = self._check(X)
        radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), (len(X),))
        if np.any(np.isnan(radius)) or np.any(radius < 0):
            raise ValueError("radius must be non-negative")
        instrument.bump("radius_query", len(X))
        if self._tree is not None:
            found = self._tree_radius(X, radius, None)
            return np.array([int((d < r).sum()) if strict else len(d)
                             for (_, d), r in zip(found, radius)], dtype=np.int64)

        def run(b):
            s, e = b
            Q, rad = X[s:e], radius[s:e]
            approx, tol = self._screen(Q)
            with np.errstate(over="ignore"):
                r2 = (rad * rad)[:, None]
                sure = (approx + tol < r2).sum(axis=1)
                # only pairs within the rounding band need an exact distance
                rows, cols = np.nonzero(np.abs(approx - r2) <= tol)
            d = np.sqrt(pairwise_sq_rows(Q[rows], self.points[cols]))
            hit = d < rad[rows] if strict else d <= rad[rows]
            return sure + np.bincount(rows[hit], minlength=e - s)

        parts = pmap(run, chunk_bounds(len(X), max(1, 2_000_000 // max(self.size, 1))))
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    def _brute_radius(self, Q, radius, selfcol):
        approx, tol = self._screen(Q)
        if selfcol is not None:
            r = np.flatnonzero(selfcol >= 0)
            approx[r, selfcol[r]] = -np.inf
        with np.errstate(over="ignore"):
            rows, cols = np.nonzero(approx <= (radius * radius)[:, None] + tol)
        d = self._exact_pairs(Q, rows, cols, selfcol)
        keep = d <= radius[rows]
        rows, cols, d = rows[keep], cols[keep], d[keep]
        bounds = np.searchsorted(rows, np.arange(len(Q) + 1))
        return [(cols[a:b], d[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]

    def _tree_radius(self, X, radius, selfcol):
        tree = self._tree
        acc_c = [[] for _ in range(len(X))]
        acc_d = [[] for _ in range(len(X))]
        leaves = tree.leaf_of(X)
        order = np.lexsort((np.arange(len(X)), leaves))
        for s, e in chunk_bounds(len(order), 64):
            g = order[s:e]
            Q, rad = X[g], radius[g]
            stack = [0]
            while stack:
                node = stack.pop()
                lb = tree.lower_bounds(node, Q)
                if np.all(lb > rad + _margin(rad)):
                    continue
                if tree.left[node] >= 0:
                    stack.extend((tree.left[node], tree.right[node]))
                    continue
                cols = tree.perm[tree.start[node]:tree.end[node]]
                D = pairwise_distances(Q, self.points[cols])
                if selfcol is not None:
                    D[selfcol[g][:, None] == cols[None, :]] = _SELF
                for qi, row in enumerate(D):
                    hit = row <= rad[qi]
                    if hit.any():
                        acc_c[g[qi]].append(cols[hit])
                        acc_d[g[qi]].append(row[hit])
        return [(np.concatenate(c) if c else np.empty(0, dtype=np.int64),
                 np.concatenate(d) if d else np.empty(0)) for c, d in zip(acc_c, acc_d)]


def knn_query(model: NeighborModel, queries: Dataset, k: int) -> list[NeighborList]:
    """``min(k + 1, |reference|)`` neighbors per query, self first when present."""
    if k < 1:
        raise ValueError("k must be positive")
    idx, dist = model.kneighbors(queries.features, k + 1, queries.row_ids)
    ref_ids = _reference_ids(model)
    return [NeighborList(int(qid), ref_ids[i], d)
            for qid, i, d in zip(queries.row_ids, idx, dist)]


def radius_query(model: NeighborModel, queries: Dataset, radius: float,
                 max_neighbors: int = 100) -> list[NeighborList]:
    """All reference rows within ``radius`` (inclusive), capped at ``max_neighbors``."""
    found = model.radius_neighbors(queries.features, radius, max_neighbors, queries.row_ids)
    ref_ids = _reference_ids(model)
    return [NeighborList(int(qid), ref_ids[i], d, t)
            for qid, (i, d, t) in zip(queries.row_ids, found)]


def _reference_ids(model: NeighborModel) -> np.ndarray:
    """row_ids indexed by position in the reference as originally passed."""
    ids = np.empty_like(model.row_ids)
    ids[model._order] = model.row_ids
    return ids
