"""Control systems, trajectory rollout, cost evaluation and feasibility checks.

A :class:`ControlSystem` bundles the pieces of an optimal planning problem:
dynamics, incremental and terminal cost, control sampling, state constraints,
goal test and start state. Segments are rolled out either with fixed-step RK4
or with a closed-form propagator supplied by the problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .space import BoxBounds, Metric


class IntegrationError(ArithmeticError):
    """Non-finite derivative or state encountered during a rollout."""

    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


def _zero_terminal(x) -> float:
    return 0.0


def _zero_heuristic(x):
    return np.zeros(np.shape(x)[:-1])


@dataclass(eq=False)
class ControlSystem:
    """An optimal kinodynamic planning problem as callables.

    ``propagate(x0, u, ts)`` (closed form) returns the states at the times in
    the 1-D array ``ts``; ``segment_cost(x0, u, ts)`` returns the integral of
    the incremental cost from 0 to each ``ts``. When ``propagate`` is None the
    ``derivative`` is integrated with RK4 at step ``dt``; for closed-form
    systems ``dt`` is the feasibility-check resolution instead.

    ``heuristic`` must underestimate the cost-to-go and broadcast over leading
    axes (a ``(k, n)`` array of states gives ``k`` values).
    """

    name: str
    state_bounds: BoxBounds
    dim_control: int
    start: np.ndarray
    derivative: Optional[Callable]
    incremental_cost: Callable
    sample_control: Callable
    feasible: Callable
    in_goal: Callable
    terminal_cost: Callable = _zero_terminal
    dt: float = 0.01
    propagate: Optional[Callable] = None
    segment_cost: Optional[Callable] = None
    segment_feasible: Optional[Callable] = None
    steer: Optional[Callable] = None
    goal_bounds: Optional[BoxBounds] = None
    metric: Optional[Metric] = None
    heuristic: Callable = _zero_heuristic
    cost_scale: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.start = np.array(self.start, dtype=float)
        if self.start.shape != (self.dim_state,):
            raise ValueError("start dimension does not match state bounds")
        if (self.propagate is None) != (self.segment_cost is None):
            raise ValueError("closed-form systems need both propagate and segment_cost")
        if self.propagate is None and self.derivative is None:
            raise ValueError("need a derivative or a closed-form propagator")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.metric is None:
            self.metric = Metric.euclidean(self.dim_state)
        if self.goal_bounds is None:
            self.goal_bounds = self.state_bounds
        self._check_nonnegative_cost()

    def _check_nonnegative_cost(self, n: int = 16):
        # Spot check; the cost axis must be monotone for bounds and pruning.
        rng = np.random.default_rng(0)
        for _ in range(n):
            u, _ = self.sample_control(self.start, rng)
            if self.incremental_cost(self.start, u) < 0:
                raise ValueError(f"{self.name}: incremental cost must be >= 0")

    @property
    def dim_state(self) -> int:
        return self.state_bounds.dim

    @property
    def integration_mode(self) -> str:
        return "rk4" if self.propagate is None else "closed-form"

    def time_grid(self, duration: float) -> np.ndarray:
        """Integration partition of [0, duration]; last step may be short."""
        if duration < 0:
            raise ValueError(f"negative duration {duration}")
        if duration == 0:
            return np.zeros(1)
        if duration <= self.dt:
            return np.array([0.0, duration])
        n = max(1, math.ceil(duration / self.dt - 1e-9))
        ts = np.arange(n + 1, dtype=float) * self.dt
        ts[-1] = duration
        return ts

    def rollout(self, x0, u, duration: float):
        """Micro-states along a segment and the cost accrued up to each one.

        Returns ``(states, costs)`` with shapes ``(k+1, n)`` and ``(k+1,)``;
        ``costs[0] == 0`` and ``states[0] == x0``.
        """
        x0 = np.asarray(x0, dtype=float)
        ts = self.time_grid(duration)
        if self.propagate is not None:
            states = np.asarray(self.propagate(x0, u, ts), dtype=float)
            costs = np.asarray(self.segment_cost(x0, u, ts), dtype=float)
            if not np.isfinite(states).all():
                raise IntegrationError("non-finite state in closed-form rollout", x0)
            return states, costs
        return _rk4(self.derivative, self.incremental_cost, x0, u, ts)

    def is_valid_start(self) -> bool:
        return bool(self.feasible(self.start))


def _rk4(f, L, x0, u, ts):
    n = len(ts)
    states = np.empty((n, x0.shape[0]))
    costs = np.empty(n)
    states[0] = x0
    costs[0] = 0.0
    x = x0
    c = 0.0
    for i in range(1, n):
        h = ts[i] - ts[i - 1]
        k1 = f(x, u)
        l1 = L(x, u)
        x2 = x + (0.5 * h) * k1
        k2 = f(x2, u)
        l2 = L(x2, u)
        x3 = x + (0.5 * h) * k2
        k3 = f(x3, u)
        l3 = L(x3, u)
        x4 = x + h * k3
        k4 = f(x4, u)
        l4 = L(x4, u)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        c = c + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        if not (np.all(np.isfinite(x)) and math.isfinite(c)):
            raise IntegrationError(f"non-finite derivative near state {states[i - 1]}",
                                   states[i - 1].copy())
        states[i] = x
        costs[i] = c
    return states, costs


def integrate(sys: ControlSystem, x0, u, duration: float, rng=None) -> np.ndarray:
    """States at integration resolution from ``x0`` under constant ``u``."""
    return sys.rollout(x0, u, duration)[0]


def check_segment_feasible(sys: ControlSystem, states) -> bool:
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or len(states) == 0:
        raise ValueError("need a nonempty (k, n) array of states")
    if sys.segment_feasible is not None:
        return bool(sys.segment_feasible(states))
    return all(sys.feasible(x) for x in states)


@dataclass(frozen=True)
class Segment:
    x_from: np.ndarray
    u: np.ndarray
    duration: float
    x_to: np.ndarray


@dataclass
class Trajectory:
    """Piecewise-constant-control trajectory starting at ``start``."""

    start: np.ndarray
    segments: list = field(default_factory=list)
    total_cost: Optional[float] = None

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].x_to if self.segments else self.start

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def is_chained(self, tol: float = 0.0) -> bool:
        prev = self.start
        for s in self.segments:
            if np.max(np.abs(np.asarray(s.x_from) - prev), initial=0.0) > tol:
                return False
            prev = s.x_to
        return True

    def append(self, sys: ControlSystem, u, duration: float) -> "Trajectory":
        """Extend in place by rolling ``u`` out from the current end state."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        states = integrate(sys, self.end, u, duration)
        self.segments.append(Segment(np.array(self.end), u, float(duration), states[-1]))
        self.total_cost = None
        return self

    def concat(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.start, list(self.segments) + list(other.segments))

    def states(self, sys: ControlSystem) -> np.ndarray:
        """All micro-states along the trajectory (replayed)."""
        out = [np.asarray(self.start, dtype=float)[None, :]]
        for s in self.segments:
            out.append(integrate(sys, s.x_from, s.u, s.duration)[1:])
        return np.vstack(out)


def incremental_cost_integral(sys: ControlSystem, t: Trajectory) -> float:
    total = 0.0
    for s in t.segments:
        total = total + sys.rollout(s.x_from, s.u, s.duration)[1][-1]
    return total


def trajectory_cost(sys: ControlSystem, t: Trajectory) -> float:
    """Integral of the incremental cost plus terminal cost at the end state.

    Segments are summed in order with the same rollout a planner uses, so the
    result is bit-identical to a tree's accumulated cost-to-come plus terminal
    cost.
    """
    return incremental_cost_integral(sys, t) + sys.terminal_cost(t.end)


def replay_feasible(sys: ControlSystem, t: Trajectory, tol: float = 1e-9) -> bool:
    """Re-integrate every segment and check chaining and feasibility."""
    prev = np.asarray(t.start, dtype=float)
    if not sys.feasible(prev):
        return False
    for s in t.segments:
        if np.max(np.abs(np.asarray(s.x_from) - prev)) > tol:
            return False
        states = integrate(sys, prev, s.u, s.duration)
        if not check_segment_feasible(sys, states):
            return False
        if np.max(np.abs(states[-1] - s.x_to)) > tol:
            return False
        prev = states[-1]
    return True
