"""Shortest-path oracles for 2D rectangle worlds.

Two independent estimates of the optimal path length from the start to the
goal region:

* ``visibility_optimum`` is exact for rectangle obstacles: the shortest path
  bends only at obstacle corners, so Dijkstra over the visibility graph of
  corners (plus start and goal) gives the optimum. Obstacles are treated as
  open sets, so the value is the infimum over paths that avoid them.
* ``grid_optimum`` runs Dijkstra on an 8-connected occupancy grid. It is an
  overestimate (8-connected moves cannot follow arbitrary headings) that
  converges as the grid is refined.
"""
from __future__ import annotations

import heapq
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .geometry import RectWorld, points_in_rects, segments_hit_rects


def _corners(world: RectWorld) -> np.ndarray:
    pts = []
    for x, y, w, h in world.obstacles:
        pts += [(x, y), (x + w, y), (x, y + h), (x + w, y + h)]
    pts = np.array(pts).reshape(-1, 2)
    if len(pts) == 0:
        return pts
    # corners strictly inside another obstacle can never be path vertices
    lo, hi = world.lo, world.hi
    keep = np.all((pts >= lo) & (pts <= hi), axis=1)
    r = world.obstacles
    strictly_inside = ((pts[:, None, 0] > r[:, 0]) & (pts[:, None, 0] < r[:, 0] + r[:, 2]) &
                       (pts[:, None, 1] > r[:, 1]) & (pts[:, None, 1] < r[:, 1] + r[:, 3]))
    keep &= ~strictly_inside.any(axis=1)
    return np.unique(pts[keep], axis=0)


def visibility_optimum(world: RectWorld) -> float:
    if world.goal[0] != "circle":
        raise NotImplementedError("visibility oracle supports circular goals only")
    _, cx, cy, r = world.goal
    start = np.array(world.start[:2])
    goal = np.array([cx, cy])
    verts = np.vstack([start, goal, _corners(world)])
    n = len(verts)
    ii, jj = np.triu_indices(n, 1)
    blocked = segments_hit_rects(verts[ii], verts[jj], world.obstacles, closed=False)
    lengths = np.linalg.norm(verts[ii] - verts[jj], axis=1)
    adj = [[] for _ in range(n)]
    for a, b, L, bad in zip(ii, jj, lengths, blocked):
        if not bad:
            adj[a].append((b, L))
            adj[b].append((a, L))
    dist = [math.inf] * n
    dist[0] = 0.0
    heap = [(0.0, 0)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w, L in adj[v]:
            nd = d + L
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    # the last leg into an obstacle-free disc is straight, so reaching its
    # boundary saves exactly r over reaching the centre
    return max(dist[1] - r, 0.0)


def grid_optimum(world: RectWorld, resolution: int = 1000) -> float:
    """8-connected grid Dijkstra between the cells containing start and goal region."""
    x0, x1, y0, y1 = world.domain
    hx = (x1 - x0) / resolution
    hy = (y1 - y0) / resolution
    xs = x0 + (np.arange(resolution) + 0.5) * hx
    ys = y0 + (np.arange(resolution) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    free = np.ones(len(pts), dtype=bool)
    for rect in world.obstacles:
        free &= ~points_in_rects(pts, rect[None, :])
    free = free.reshape(resolution, resolution)
    idx = np.arange(resolution * resolution).reshape(resolution, resolution)
    rows, cols, vals = [], [], []
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        i0 = slice(max(0, -di), resolution - max(0, di))
        j0 = slice(max(0, -dj), resolution - max(0, dj))
        i1 = slice(max(0, di), resolution - max(0, -di))
        j1 = slice(max(0, dj), resolution - max(0, -dj))
        ok = free[i0, j0] & free[i1, j1]
        if di and dj:
            # no corner cutting: both orthogonal neighbours must be free
            ok &= free[i1, j0] & free[i0, j1]
        rows.append(idx[i0, j0][ok])
        cols.append(idx[i1, j1][ok])
        vals.append(np.full(ok.sum(), math.hypot(di * hx, dj * hy)))
    g = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(idx.size, idx.size)).tocsr()
    si = min(int((world.start[0] - x0) / hx), resolution - 1)
    sj = min(int((world.start[1] - y0) / hy), resolution - 1)
    dist = dijkstra(g, directed=False, indices=int(idx[si, sj]))
    in_goal = np.array([world.in_goal(p) for p in pts]) if world.goal[0] != "circle" else \
        (pts[:, 0] - world.goal[1]) ** 2 + (pts[:, 1] - world.goal[2]) ** 2 <= world.goal[3] ** 2
    return float(dist[in_goal & free.ravel()].min())
