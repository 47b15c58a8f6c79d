"""Lifting an optimal planning problem into state-cost space.

The lifted state is ``z = (x, c)`` where ``c`` is the cost-to-come. Its
dynamics append the incremental cost as the derivative of ``c``, the lifted
problem has no incremental cost, and its terminal cost is ``c + Phi(x)``.
Optimal planning in the base space becomes a sequence of feasible planning
problems against the cost-bounded goal set ``{(x, c) : x in G, c <= cbar - Phi(x)}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import ControlSystem, Segment, Trajectory


@dataclass(frozen=True)
class AugmentedState:
    x: np.ndarray
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c >= 0):
            raise ValueError(f"cost-to-come must be finite and >= 0, got {self.c}")

    @classmethod
    def from_array(cls, z) -> "AugmentedState":
        z = np.asarray(z, dtype=float)
        return cls(z[:-1], float(z[-1]))

    def as_array(self) -> np.ndarray:
        return np.append(np.asarray(self.x, dtype=float), self.c)


def _lifted_derivative(base: ControlSystem) -> Callable:
    def f(z, u):
        x = z[:-1]
        return np.append(base.derivative(x, u), base.incremental_cost(x, u))
    return f


def _no_cost(z, u) -> float:
    return 0.0


class LiftedSystem(ControlSystem):
    """``base`` viewed as a control system over (state, cost-to-come).

    Rollouts go through the base system's rollout so the cost coordinate is
    exactly the base cost integral on the same partition, offset by the
    starting cost.
    """

    def __init__(self, base: ControlSystem):
        self.base = base
        derivative = _lifted_derivative(base) if base.derivative is not None else None
        super().__init__(
            name=f"{base.name}-statecost",
            state_bounds=base.state_bounds.append_axis(0.0, math.inf),
            dim_control=base.dim_control,
            start=np.append(base.start, 0.0),
            derivative=derivative,
            incremental_cost=_no_cost,
            sample_control=base.sample_control,
            feasible=lambda z: base.feasible(z[:-1]),
            in_goal=lambda z: base.in_goal(z[:-1]),
            terminal_cost=lambda z: z[-1] + base.terminal_cost(z[:-1]),
            dt=base.dt,
            metric=base.metric.extended(0.0),
            heuristic=lambda z: base.heuristic(z[:-1]),
            cost_scale=base.cost_scale,
            params=base.params,
        )
        self.goal_bounds = base.goal_bounds.append_axis(0.0, math.inf)
        if base.segment_feasible is not None:
            self.segment_feasible = lambda zs: base.segment_feasible(zs[:, :-1])

    def rollout(self, z0, u, duration: float):
        z0 = np.asarray(z0, dtype=float)
        states, costs = self.base.rollout(z0[:-1], u, duration)
        lifted = np.empty((states.shape[0], states.shape[1] + 1))
        lifted[:, :-1] = states
        lifted[:, -1] = z0[-1] + costs
        return lifted, np.zeros(len(costs))

    def project(self, t: Trajectory) -> Trajectory:
        """Drop the cost coordinate from a lifted trajectory."""
        segs = [Segment(s.x_from[:-1], s.u, s.duration, s.x_to[:-1]) for s in t.segments]
        return Trajectory(np.asarray(t.start)[:-1], segs)


def lift(P: ControlSystem) -> LiftedSystem:
    return LiftedSystem(P)


@dataclass(frozen=True)
class CostBoundedGoal:
    cbar: float = math.inf

    def __post_init__(self):
        if not self.cbar > 0:
            raise ValueError(f"cost bound must be > 0, got {self.cbar}")

    def contains(self, P: ControlSystem, z) -> bool:
        z = np.asarray(z, dtype=float)
        x, c = z[:-1], z[-1]
        if not P.in_goal(x):
            return False
        return c <= self.cbar - P.terminal_cost(x)


def goal_contains(g: CostBoundedGoal, P: ControlSystem, z) -> bool:
    if isinstance(z, AugmentedState):
        z = z.as_array()
    return g.contains(P, z)


def should_prune(z, cbar: float, h: Callable) -> bool:
    """True iff cost-to-come plus the cost-to-go estimate exceeds ``cbar``."""
    if isinstance(z, AugmentedState):
        return z.c + h(z.x) > cbar
    z = np.asarray(z, dtype=float)
    return z[-1] + h(z[:-1]) > cbar
