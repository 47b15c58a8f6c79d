"""Nearest-neighbor and density indices over tree nodes.

``KdTree`` is an incremental, bucketed KD-tree answering exact nearest-node
queries under a weighted metric with circular axes. ``DensityGrid`` is the
multi-grid occupancy estimator used by EST: every size-k subset of axes is a
projection, hashed at resolution h on unit-scaled coordinates.
"""
from __future__ import annotations

import math
from itertools import combinations
from typing import Hashable, Optional, Sequence

import numpy as np

from .space import TWO_PI, BoxBounds, Metric


class _Node:
    __slots__ = ("lo", "hi", "axis", "split", "left", "right", "items")

    def __init__(self, dim):
        self.lo = [math.inf] * dim
        self.hi = [-math.inf] * dim
        self.axis = -1
        self.split = 0.0
        self.left = None
        self.right = None
        self.items = []     # row indices into the point buffer (leaves only)


class KdTree:
    """Exact nearest neighbor with incremental insert and lazy deletion.

    Points live in a growable buffer; leaves hold up to ``leaf_size`` rows and
    split at the median of the next axis in a cycle over positively weighted
    axes. Every node keeps the bounding box of its points, which gives a valid
    lower bound on the distance to anything beneath it, including along
    angular axes (points are stored wrapped to [0, 2*pi)). Removal marks rows
    dead; the tree is rebuilt once more than half of it is dead.
    """

    def __init__(self, metric: Metric, leaf_size: int = 24):
        self.metric = metric
        self.dim = metric.dim
        self.leaf_size = leaf_size
        self._ang = np.zeros(self.dim, dtype=bool)
        self._ang[list(metric.angular_axes)] = True
        self._split_axes = [i for i in range(self.dim) if metric.weights[i] > 0] \
            or list(range(self.dim))
        self._axis_kinds = [(i, bool(self._ang[i])) for i in range(self.dim)]
        self._pts = np.empty((64, self.dim))
        self._ids: list = []
        self._alive = np.zeros(64, dtype=bool)
        self._row_of: dict = {}
        self._n = 0
        self._dead = 0
        self._root = _Node(self.dim)

    def __len__(self) -> int:
        return self._n - self._dead

    def _normalize(self, p) -> np.ndarray:
        p = np.array(p, dtype=float)
        if self._ang.any():
            p[self._ang] = np.mod(p[self._ang], TWO_PI)
        return p

    def insert(self, id: Hashable, point) -> None:
        p = self._normalize(point)
        if p.shape != (self.dim,):
            raise ValueError(f"expected point of dimension {self.dim}, got {p.shape}")
        if id in self._row_of:
            raise KeyError(f"duplicate id {id!r}")
        if self._n == len(self._pts):
            self._pts = np.concatenate([self._pts, np.empty_like(self._pts)])
            self._alive = np.concatenate([self._alive, np.zeros_like(self._alive)])
        row = self._n
        self._pts[row] = p
        self._alive[row] = True
        self._ids.append(id)
        self._row_of[id] = row
        self._n += 1
        node = self._root
        depth = 0
        pl = p.tolist()
        rng_dim = range(self.dim)
        while True:
            lo, hi = node.lo, node.hi
            for i in rng_dim:
                v = pl[i]
                if v < lo[i]:
                    lo[i] = v
                if v > hi[i]:
                    hi[i] = v
            if node.left is None:
                break
            node = node.left if p[node.axis] < node.split else node.right
            depth += 1
        node.items.append(row)
        if len(node.items) > self.leaf_size:
            self._split(node, depth)

    def _split(self, node: _Node, depth: int) -> None:
        rows = np.array(node.items)
        pts = self._pts[rows]
        for k in range(len(self._split_axes)):
            axis = self._split_axes[(depth + k) % len(self._split_axes)]
            vals = pts[:, axis]
            split = float(np.median(vals))
            left = vals < split
            if not left.any():
                # many ties at the median; split just above the minimum instead
                hi_vals = vals[vals > split]
                if hi_vals.size == 0:
                    continue
                split = float(hi_vals.min())
                left = vals < split
            node.axis, node.split = axis, split
            node.left, node.right = _Node(self.dim), _Node(self.dim)
            for child, mask in ((node.left, left), (node.right, ~left)):
                sub = rows[mask]
                child.items = sub.tolist()
                child.lo = self._pts[sub].min(axis=0).tolist()
                child.hi = self._pts[sub].max(axis=0).tolist()
            node.items = []
            return
        # all points identical on every split axis: keep an oversized leaf

    def remove(self, id: Hashable) -> None:
        row = self._row_of.pop(id)
        self._alive[row] = False
        self._dead += 1
        if self._dead * 2 > self._n:
            self.rebuild()

    def rebuild(self, items: Optional[Sequence] = None) -> None:
        """Bulk rebuild, from live points or from ``(id, point)`` pairs."""
        if items is None:
            rows = np.flatnonzero(self._alive[: self._n])
            items = [(self._ids[r], self._pts[r].copy()) for r in rows]
        self.__init__(self.metric, self.leaf_size)
        for id, p in items:
            self.insert(id, p)

    def _box_lower_bound_sq(self, node: _Node, q: list, w: list) -> float:
        total = 0.0
        lo, hi = node.lo, node.hi
        for i, ang in self._axis_kinds:
            qi = q[i]
            if lo[i] <= qi <= hi[i]:
                continue
            if ang:
                # q lies outside the arc [lo, hi]; nearest arc point is an end
                a = (qi - lo[i]) % TWO_PI
                b = (qi - hi[i]) % TWO_PI
                g = min(a, TWO_PI - a, b, TWO_PI - b)
            elif qi < lo[i]:
                g = lo[i] - qi
            else:
                g = qi - hi[i]
            total += w[i] * g * g
        return total

    def nearest(self, q, weights=None):
        """Return ``(id, distance)`` of the nearest live point.

        ``weights`` optionally replaces the metric weights for this query
        (e.g. zeroing the cost axis); angular axes are unchanged.
        """
        if len(self) == 0:
            raise LookupError("nearest() on an empty KdTree")
        q = self._normalize(q)
        w = self.metric.weights if weights is None else np.asarray(weights, dtype=float)
        ang = list(self.metric.angular_axes)
        ql = q.tolist()
        wl = w.tolist()
        lower_bound = self._box_lower_bound_sq
        best = [math.inf, -1]
        pts = self._pts
        alive = self._alive

        def visit(node):
            if node.left is None:
                if not node.items:
                    return
                rows = np.array(node.items)
                d = np.abs(pts[rows] - q)
                if ang:
                    d[:, ang] = np.minimum(d[:, ang], TWO_PI - d[:, ang])
                dsq = (d * d) @ w
                dsq[~alive[rows]] = math.inf
                i = int(np.argmin(dsq))
                if dsq[i] < best[0]:
                    best[0] = float(dsq[i])
                    best[1] = int(rows[i])
                return
            lb_l = lower_bound(node.left, ql, wl)
            lb_r = lower_bound(node.right, ql, wl)
            first, second, lb2 = (node.left, node.right, lb_r) if lb_l <= lb_r \
                else (node.right, node.left, lb_l)
            if min(lb_l, lb_r) < best[0]:
                visit(first)
            if lb2 < best[0]:
                visit(second)

        visit(self._root)
        return self._ids[best[1]], math.sqrt(best[0])

    def brute_force_nearest(self, q, weights=None):
        """Linear-scan reference answer (same tie-breaking is not guaranteed)."""
        rows = np.flatnonzero(self._alive[: self._n])
        if rows.size == 0:
            raise LookupError("empty")
        m = self.metric if weights is None else self.metric.with_weights(weights)
        d = m.distances(self._pts[rows], self._normalize(q))
        i = int(np.argmin(d))
        return self._ids[rows[i]], float(d[i])


def kd_insert(t: KdTree, id, z) -> None:
    t.insert(id, z)


def kd_nearest(t: KdTree, q):
    return t.nearest(q)[0]


class DensityGrid:
    """Occupancy counts over all k-axis projections of the unit-scaled space."""

    def __init__(self, bounds: BoxBounds, h: float = 0.1, k: int = 3,
                 angular_axes: Sequence[int] = ()):
        if not bounds.is_finite():
            raise ValueError("density grid needs finite scaling bounds")
        self.bounds = bounds
        self.h = h
        self.k = k
        self.angular_axes = list(angular_axes)
        dim = bounds.dim
        self.projections = [tuple(c) for c in combinations(range(dim), k)] \
            if dim >= k else [tuple(range(dim))]
        self._cells: list[dict] = [dict() for _ in self.projections]
        self._lo = bounds.lo.tolist()
        self._width = bounds.width.tolist()
        self._mid = [w <= 0 for w in bounds.width.tolist()]
        self._occupied: list = []
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def _cell(self, z) -> list:
        # same as floor(scale_to_unit(z) / h), in scalar arithmetic
        z = z.tolist() if isinstance(z, np.ndarray) else [float(v) for v in z]
        for a in self.angular_axes:
            z[a] = z[a] % TWO_PI
        half = int(math.floor(0.5 / self.h))
        h = self.h
        return [half if mid else int(math.floor((v - lo) / w / h))
                for v, lo, w, mid in zip(z, self._lo, self._width, self._mid)]

    def keys(self, z) -> list:
        cell = self._cell(z)
        return [tuple(cell[a] for a in axes) for axes in self.projections]

    def insert(self, id, z) -> None:
        for p, key in enumerate(self.keys(z)):
            cells = self._cells[p]
            members = cells.get(key)
            if members is None:
                cells[key] = [id]
                self._occupied.append((p, key))
            else:
                members.append(id)
        self._size += 1

    def count(self, z) -> int:
        total = 0
        for p, key in enumerate(self.keys(z)):
            members = self._cells[p].get(key)
            if members:
                total += len(members)
        return total

    def sample_source(self, rng: np.random.Generator):
        """Uniform occupied (projection, cell) pair, then a uniform member."""
        if not self._occupied:
            raise LookupError("sample_source() on an empty DensityGrid")
        # int(n * random()) is uniform on 0..n-1 and much cheaper than integers()
        p, key = self._occupied[int(len(self._occupied) * rng.random())]
        members = self._cells[p][key]
        return members[int(len(members) * rng.random())]

    def occupancy(self) -> dict:
        return {(p, key): list(m) for p, cells in enumerate(self._cells)
                for key, m in cells.items()}

    def rebuild(self, items, bounds: Optional[BoxBounds] = None) -> None:
        """Rehash ``(id, z)`` pairs, optionally under new scaling bounds."""
        self.__init__(bounds or self.bounds, self.h, self.k, self.angular_axes)
        for id, z in items:
            self.insert(id, z)


def density_count(g: DensityGrid, z) -> int:
    return g.count(z)


def sample_source(g: DensityGrid, rng):
    return g.sample_source(rng)
