"""Axis-aligned rectangle worlds and exact segment/rectangle tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

FIXTURE_VERSION = 1
FIXTURE_DIR = Path(__file__).parent / "fixtures"


def segments_hit_rects(p0, p1, rects, closed: bool = True) -> np.ndarray:
    """For each segment p0[i]->p1[i], whether it meets any rectangle.

    ``rects`` rows are ``(x, y, w, h)``. With ``closed=False`` only the open
    interiors count, so segments may graze edges and corners.
    """
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    rects = np.asarray(rects, dtype=float).reshape(-1, 4)
    if rects.shape[0] == 0:
        return np.zeros(p0.shape[0], dtype=bool)
    lo = rects[None, :, :2]
    hi = lo + rects[None, :, 2:]
    p = p0[:, None, :]
    d = (p1 - p0)[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - p) / d
        t2 = (hi - p) / d
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    par = d == 0.0
    if closed:
        inside = (p >= lo) & (p <= hi)
    else:
        inside = (p > lo) & (p < hi)
    tmin = np.where(par, np.where(inside, -np.inf, np.inf), tmin)
    tmax = np.where(par, np.where(inside, np.inf, -np.inf), tmax)
    enter = np.maximum(tmin.max(axis=2), 0.0)
    leave = np.minimum(tmax.min(axis=2), 1.0)
    if closed:
        hit = enter <= leave
    else:
        hit = enter < leave
    return hit.any(axis=1)


def points_in_rects(pts, rects) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    rects = np.asarray(rects, dtype=float).reshape(-1, 4)
    if rects.shape[0] == 0:
        return np.zeros(pts.shape[0], dtype=bool)
    x = pts[:, None, 0]
    y = pts[:, None, 1]
    inside = (x >= rects[:, 0]) & (x <= rects[:, 0] + rects[:, 2]) & \
             (y >= rects[:, 1]) & (y <= rects[:, 1] + rects[:, 3])
    return inside.any(axis=1)


@dataclass
class RectWorld:
    """A 2D workspace with rectangle obstacles.

    ``goal`` is either ``("circle", cx, cy, r)`` or ``("rect", x, y, w, h)``.
    ``optimum`` is the exact shortest path length (visibility graph) and
    ``grid_optimum`` the 8-connected grid Dijkstra value, when known.
    """

    name: str
    domain: tuple
    start: tuple
    goal: tuple
    obstacles: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    optimum: Optional[float] = None
    grid_optimum: Optional[float] = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.obstacles = np.asarray(self.obstacles, dtype=float).reshape(-1, 4)
        self._rect_list = [tuple(float(v) for v in r) for r in self.obstacles]
        self.domain = tuple(float(v) for v in self.domain)
        self.start = tuple(float(v) for v in self.start)
        self.goal = (self.goal[0],) + tuple(float(v) for v in self.goal[1:])

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.domain[0], self.domain[2]])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.domain[1], self.domain[3]])

    def in_domain(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def point_free(self, p) -> bool:
        p = np.asarray(p, dtype=float)[None, :2]
        return bool(self.in_domain(p)[0] and not points_in_rects(p, self.obstacles)[0])

    def points_free(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)[:, :2]
        return self.in_domain(pts) & ~points_in_rects(pts, self.obstacles)

    def segment_free(self, a, b) -> bool:
        a = np.asarray(a, dtype=float)[:2]
        b = np.asarray(b, dtype=float)[:2]
        if not (self.in_domain(a)[0] and self.in_domain(b)[0]):
            return False
        return not bool(segments_hit_rects(a, b, self.obstacles)[0])

    def _chord_free(self, ax, ay, bx, by) -> bool:
        # scalar slab test, much cheaper than the array version for one segment
        x0, x1, y0, y1 = self.domain
        if not (x0 <= ax <= x1 and y0 <= ay <= y1 and x0 <= bx <= x1 and y0 <= by <= y1):
            return False
        dx, dy = bx - ax, by - ay
        for rx, ry, rw, rh in self._rect_list:
            t0, t1 = 0.0, 1.0
            hit = True
            for p, d, lo, hi in ((ax, dx, rx, rx + rw), (ay, dy, ry, ry + rh)):
                if d == 0.0:
                    if p < lo or p > hi:
                        hit = False
                        break
                    continue
                ta, tb = (lo - p) / d, (hi - p) / d
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
                if t0 > t1:
                    hit = False
                    break
            if hit:
                return False
        return True

    def polyline_free(self, pts) -> bool:
        """Exact check of consecutive straight segments (domain is convex)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))[:, :2]
        if len(pts) == 2:
            (ax, ay), (bx, by) = pts.tolist()
            return self._chord_free(ax, ay, bx, by)
        if not np.all(self.in_domain(pts)):
            return False
        if len(pts) == 1:
            return not bool(points_in_rects(pts, self.obstacles)[0])
        return not bool(segments_hit_rects(pts[:-1], pts[1:], self.obstacles).any())

    def in_goal(self, p) -> bool:
        kind = self.goal[0]
        if kind == "circle":
            _, cx, cy, r = self.goal
            return (p[0] - cx) ** 2 + (p[1] - cy) ** 2 <= r * r
        _, x, y, w, h = self.goal
        return x <= p[0] <= x + w and y <= p[1] <= y + h

    def goal_box(self) -> tuple:
        """(lo, hi) of the goal region's bounding box."""
        if self.goal[0] == "circle":
            _, cx, cy, r = self.goal
            return np.array([cx - r, cy - r]), np.array([cx + r, cy + r])
        _, x, y, w, h = self.goal
        return np.array([x, y]), np.array([x + w, y + h])

    def _point_distance_to_goal(self, x: float, y: float) -> float:
        if self.goal[0] == "circle":
            _, cx, cy, r = self.goal
            return max(math.hypot(x - cx, y - cy) - r, 0.0)
        _, gx, gy, w, h = self.goal
        dx = max(gx - x, x - gx - w, 0.0)
        dy = max(gy - y, y - gy - h, 0.0)
        return math.hypot(dx, dy)

    def distance_to_goal(self, pts) -> np.ndarray:
        """Euclidean distance from points (..., >=2) to the goal region."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            return self._point_distance_to_goal(float(pts[0]), float(pts[1]))
        xy = pts[..., :2]
        if self.goal[0] == "circle":
            _, cx, cy, r = self.goal
            d = np.sqrt((xy[..., 0] - cx) ** 2 + (xy[..., 1] - cy) ** 2) - r
            return np.maximum(d, 0.0)
        lo, hi = self.goal_box()
        gap = np.maximum(np.maximum(lo - xy, xy - hi), 0.0)
        return np.sqrt((gap * gap).sum(axis=-1))


def format_fixture(world: RectWorld) -> str:
    lines = [f"# aoplan rectangle world; rectangle lines are: x y w h",
             f"version {FIXTURE_VERSION}",
             f"name {world.name}",
             "domain " + " ".join(repr(v) for v in world.domain),
             "start " + " ".join(repr(v) for v in world.start),
             "goal " + world.goal[0] + " " + " ".join(repr(v) for v in world.goal[1:])]
    if world.optimum is not None:
        lines.append(f"optimum {float(world.optimum)!r}")
    if world.grid_optimum is not None:
        lines.append(f"grid_optimum {float(world.grid_optimum)!r}")
    for note in world.notes:
        lines.append(f"# {note}")
    for r in world.obstacles:
        lines.append(" ".join(repr(float(v)) for v in r))
    return "\n".join(lines) + "\n"


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_fixture(text: str) -> RectWorld:
    fields: dict = {}
    rects = []
    notes = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if not line.startswith("# aoplan"):
                notes.append(line[1:].strip())
            continue
        tok = line.split()
        if _is_number(tok[0]):
            if len(tok) != 4:
                raise ValueError(f"rectangle needs 4 numbers: {raw!r}")
            rects.append([float(v) for v in tok])
        else:
            fields[tok[0]] = tok[1:]
    version = int(fields.get("version", ["0"])[0])
    if version != FIXTURE_VERSION:
        raise ValueError(f"unsupported fixture version {version}")
    for key in ("name", "domain", "start", "goal"):
        if key not in fields:
            raise ValueError(f"fixture missing '{key}' line")
    goal = fields["goal"]
    return RectWorld(
        name=fields["name"][0],
        domain=[float(v) for v in fields["domain"]],
        start=[float(v) for v in fields["start"]],
        goal=(goal[0],) + tuple(float(v) for v in goal[1:]),
        obstacles=np.array(rects).reshape(-1, 4),
        optimum=float(fields["optimum"][0]) if "optimum" in fields else None,
        grid_optimum=float(fields["grid_optimum"][0]) if "grid_optimum" in fields else None,
        notes=notes,
    )


def load_world(name: str, fixtures_dir: Optional[Path] = None) -> RectWorld:
    path = Path(fixtures_dir or FIXTURE_DIR) / f"{name}.txt"
    return parse_fixture(path.read_text())


def save_world(world: RectWorld, fixtures_dir: Optional[Path] = None) -> Path:
    path = Path(fixtures_dir or FIXTURE_DIR) / f"{world.name}.txt"
    path.write_text(format_fixture(world))
    return path
