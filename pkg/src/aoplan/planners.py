"""Kinodynamic RRT and EST as feasible planners in state-cost space.

Both grow a tree of lifted states ``z = (x, c)`` rooted at ``(x_I, 0)`` by
sampling controls and integrating forward. They differ in how the node to
extend is chosen: RRT extends the node nearest to a random target (Voronoi
bias), EST draws source nodes from occupied density-grid cells and keeps one
candidate extension with probability proportional to ``1/(N+1)**2``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dynamics import Segment, Trajectory, check_segment_feasible
from .nn_index import DensityGrid, KdTree
from .space import Metric, sample_uniform
from .statecost import CostBoundedGoal, LiftedSystem


@dataclass
class PlannerConfig:
    goal_bias: float = 0.05
    n_candidates: int = 10
    selection_exponent: float = 2.0
    cost_weight: float = 1.0
    metric: Optional[Metric] = None
    density_resolution: float = 0.1
    density_k: int = 3
    goal_sample_attempts: int = 100
    check_costs: bool = False

    def __post_init__(self):
        if not 0.0 <= self.goal_bias < 1.0:
            raise ValueError("goal_bias must be in [0, 1)")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.cost_weight < 0:
            raise ValueError("cost_weight must be >= 0")


@dataclass
class Budget:
    """Shared stopping rule: ``max_iterations`` extension attempts in total
    (across every planner call charged to it) or the ``deadline``, a
    ``time.monotonic()`` timestamp.
    """

    max_iterations: Optional[int] = None
    deadline: Optional[float] = None
    used: int = 0

    @classmethod
    def seconds(cls, s: float, max_iterations: Optional[int] = None) -> "Budget":
        return cls(max_iterations, time.monotonic() + s)

    @classmethod
    def iterations(cls, n: int) -> "Budget":
        return cls(max_iterations=n)

    def exhausted(self) -> bool:
        if self.max_iterations is not None and self.used >= self.max_iterations:
            return True
        return self.deadline is not None and time.monotonic() >= self.deadline


class PlanTree:
    """Nodes in insertion order; a parent always precedes its children."""

    def __init__(self, root):
        root = np.asarray(root, dtype=float)
        self._z = np.empty((256, root.shape[0]))
        self._z[0] = root
        self.n = 1
        self.parent = [-1]
        self.control = [None]
        self.duration = [0.0]

    def __len__(self) -> int:
        return self.n

    @property
    def z(self) -> np.ndarray:
        return self._z[: self.n]

    @property
    def cost(self) -> np.ndarray:
        return self._z[: self.n, -1]

    def node(self, i: int) -> np.ndarray:
        return self._z[i]

    def add(self, z, parent: int, u, duration: float) -> int:
        if self.n == len(self._z):
            self._z = np.concatenate([self._z, np.empty_like(self._z)])
        self._z[self.n] = z
        self.parent.append(parent)
        self.control.append(u)
        self.duration.append(duration)
        self.n += 1
        return self.n - 1

    def path(self, i: int) -> list:
        out = []
        while i >= 0:
            out.append(i)
            i = self.parent[i]
        return out[::-1]

    def trajectory(self, i: int, lifted: bool = False) -> Trajectory:
        ids = self.path(i)
        z = self.z
        sl = slice(None) if lifted else slice(None, -1)
        segs = [Segment(z[self.parent[j]][sl].copy(), self.control[j],
                        self.duration[j], z[j][sl].copy()) for j in ids[1:]]
        return Trajectory(z[ids[0]][sl].copy(), segs)

    def prune(self, remove: np.ndarray) -> np.ndarray:
        """Drop flagged nodes and their descendants; returns kept old indices.

        The root is always kept.
        """
        dead = np.array(remove, dtype=bool)
        dead[0] = False
        parent = self.parent
        for i in range(1, self.n):
            if not dead[i] and dead[parent[i]]:
                dead[i] = True
        keep = np.flatnonzero(~dead)
        new_index = np.full(self.n, -1)
        new_index[keep] = np.arange(len(keep))
        buf = np.empty((max(256, 2 * len(keep)), self._z.shape[1]))
        buf[: len(keep)] = self._z[keep]
        self._z = buf
        self.parent = [int(new_index[parent[i]]) if parent[i] >= 0 else -1 for i in keep]
        self.control = [self.control[i] for i in keep]
        self.duration = [self.duration[i] for i in keep]
        self.n = len(keep)
        return keep


@dataclass
class PlanResult:
    status: str                     # "solved" | "budget"
    node: Optional[int] = None
    trajectory: Optional[Trajectory] = None
    cost: float = math.inf
    iterations: int = 0

    @property
    def solved(self) -> bool:
        return self.status == "solved"


class TreePlanner:
    """A feasible planner (RRT or EST) over a lifted system, keeping its tree."""

    def __init__(self, kind: str, sys: LiftedSystem, cfg: Optional[PlannerConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        if kind not in ("rrt", "est"):
            raise ValueError(f"unknown planner kind {kind!r}")
        self.kind = kind
        self.sys = sys
        self.base = sys.base
        self.cfg = cfg or PlannerConfig()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.tree = PlanTree(sys.start)
        self.goal_nodes = [0] if self.base.in_goal(self.base.start) else []
        self.bound = math.inf
        self.iterations = 0
        base_metric = self.cfg.metric or self.base.metric
        self.metric = base_metric.extended(self.cfg.cost_weight)
        self._state_only_weights = np.append(self.metric.weights[:-1], 0.0)
        self._rebuild_index()

    # -- indices -------------------------------------------------------------

    def _density_bounds(self):
        scale = self.bound if math.isfinite(self.bound) else self.base.cost_scale
        return self.base.state_bounds.append_axis(0.0, scale)

    def _rebuild_index(self) -> None:
        items = list(enumerate(self.tree.z))
        if self.kind == "rrt":
            self.index = KdTree(self.metric)
            self.index.rebuild(items)
        else:
            self.index = DensityGrid(self._density_bounds(), self.cfg.density_resolution,
                                     self.cfg.density_k, self.metric.angular_axes)
            self.index.rebuild(items)

    def prune(self, bound: float) -> int:
        """Set the pruning bound, drop nodes with ``c + h(x) > bound``, rebuild indices.

        Returns the number of nodes removed.
        """
        self.bound = bound
        before = len(self.tree)
        z = self.tree.z
        if math.isfinite(bound):
            h = np.asarray(self.base.heuristic(z[:, :-1]), dtype=float)
            keep = self.tree.prune(z[:, -1] + h > bound)
            new_index = {int(old): j for j, old in enumerate(keep)}
            self.goal_nodes = [new_index[i] for i in self.goal_nodes if i in new_index]
        self._rebuild_index()
        return before - len(self.tree)

    # -- extension -----------------------------------------------------------

    def _sample_goal_state(self) -> np.ndarray:
        gb = self.base.goal_bounds
        for _ in range(self.cfg.goal_sample_attempts):
            x = sample_uniform(gb, self.rng)
            if self.base.in_goal(x):
                return x
        return sample_uniform(self.base.state_bounds, self.rng)

    def _accept(self, states, z_from) -> bool:
        sys = self.sys
        if sys.segment_feasible is not None:
            ok = sys.segment_feasible(states)
        else:
            ok = check_segment_feasible(sys, states)
        if not ok:
            return False
        z = states[-1]
        if z[-1] < z_from[-1]:
            raise AssertionError("cost-to-come decreased along a segment")
        if math.isfinite(self.bound) and z[-1] + self.base.heuristic(z[:-1]) > self.bound:
            return False
        return True

    def _add(self, z, parent, u, duration) -> int:
        i = self.tree.add(z, parent, u, duration)
        self.index.insert(i, z)
        if self.base.in_goal(z[:-1]):
            self.goal_nodes.append(i)
        if self.cfg.check_costs:
            _, costs = self.base.rollout(self.tree.z[parent][:-1], u, duration)
            if self.tree.z[parent][-1] + costs[-1] != z[-1]:
                raise AssertionError("node cost differs from replayed segment cost")
        return i

    def extend_rrt(self) -> Optional[int]:
        base = self.base
        rng = self.rng
        if self.cfg.goal_bias > 0 and rng.random() < self.cfg.goal_bias:
            target = self._sample_goal_state()
        else:
            target = sample_uniform(base.state_bounds, rng)
        if math.isfinite(self.bound):
            q = np.append(target, rng.uniform(0.0, self.bound))
            near, _ = self.index.nearest(q)
        else:
            q = np.append(target, 0.0)
            near, _ = self.index.nearest(q, self._state_only_weights)
        z_near = self.tree.z[near]
        if base.steer is not None:
            u, duration = base.steer(z_near[:-1], target, rng)
        else:
            u, duration = base.sample_control(z_near[:-1], rng)
        states, _ = self.sys.rollout(z_near, u, duration)
        if not self._accept(states, z_near):
            return None
        return self._add(states[-1].copy(), near, u, duration)

    def extend_est(self) -> Optional[int]:
        rng = self.rng
        cands = []
        for _ in range(self.cfg.n_candidates):
            src = self.index.sample_source(rng)
            z_src = self.tree.node(src)
            u, duration = self.base.sample_control(z_src[:-1], rng)
            states, _ = self.sys.rollout(z_src, u, duration)
            if self._accept(states, z_src):
                z = states[-1]
                cands.append((src, u, duration, z, self.index.count(z)))
        if not cands:
            return None
        pick = cands[0]
        if len(cands) > 1:
            w = [(n + 1.0) ** -self.cfg.selection_exponent for *_, n in cands]
            r = rng.random() * sum(w)
            for cand, wi in zip(cands, w):
                pick = cand
                r -= wi
                if r < 0.0:
                    break
        src, u, duration, z, _ = pick
        return self._add(z.copy(), src, u, duration)

    def extend(self) -> Optional[int]:
        self.iterations += 1
        return self.extend_rrt() if self.kind == "rrt" else self.extend_est()

    # -- planning ------------------------------------------------------------

    def _solution(self, i: int, iterations: int) -> PlanResult:
        z = self.tree.z[i]
        cost = float(self.sys.terminal_cost(z))
        traj = self.tree.trajectory(i)
        traj.total_cost = cost
        return PlanResult("solved", i, traj, cost, iterations)

    def plan(self, goal: CostBoundedGoal, budget: Budget,
             on_iteration: Optional[Callable[["TreePlanner"], None]] = None,
             limit: Optional[int] = None) -> PlanResult:
        """Extend until a node enters ``goal`` or the budget runs out.

        ``limit`` optionally caps the iterations of this call alone.
        """
        base = self.base
        for i in self.goal_nodes:
            if goal.contains(base, self.tree.z[i]):
                return self._solution(i, 0)
        it = 0
        while not budget.exhausted() and (limit is None or it < limit):
            it += 1
            budget.used += 1
            new = self.extend()
            if on_iteration is not None:
                on_iteration(self)
            if new is not None and self.goal_nodes and self.goal_nodes[-1] == new \
                    and goal.contains(base, self.tree.z[new]):
                return self._solution(new, it)
        return PlanResult("budget", iterations=it)


def rrt_extend(planner: TreePlanner) -> Optional[int]:
    planner.iterations += 1
    return planner.extend_rrt()


def est_extend(planner: TreePlanner) -> Optional[int]:
    planner.iterations += 1
    return planner.extend_est()


def plan_feasible(kind: str, sys: LiftedSystem, goal: CostBoundedGoal,
                  cfg: Optional[PlannerConfig], budget: Budget,
                  planner: Optional[TreePlanner] = None,
                  rng: Optional[np.random.Generator] = None) -> PlanResult:
    """One feasible-planning call; pass ``planner`` to retain its tree across calls."""
    if planner is None:
        planner = TreePlanner(kind, sys, cfg, rng)
        planner.prune(goal.cbar)
    return planner.plan(goal, budget)
