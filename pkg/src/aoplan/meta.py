"""Meta-planners that turn a feasible planner into an optimizing one.

``bounded_suboptimal`` repeatedly asks a complete planner for a path that
beats the incumbent by at least ``eps``. ``ao_plan`` is the anytime version
for sampling planners: it keeps one tree, tightens the cost bound to each new
solution's cost, and prunes nodes that can no longer beat it. ``m_x_plan`` is
the restart baseline, with optional pruning against the incumbent.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .dynamics import ControlSystem, Trajectory
from .planners import Budget, PlannerConfig, TreePlanner
from .statecost import CostBoundedGoal, lift

# New bounds sit this far below the incumbent so every solution is a strict
# improvement; without it a goal node costing exactly c_{i-1} would be
# returned again.
IMPROVEMENT_MARGIN = 1e-9

BUDGET = "budget"
NO_SOLUTION = "converged-no-solution-found"
INFEASIBLE = "infeasible"


@dataclass
class CostEvent:
    meta_iter: int
    cost: float
    wall_s: float
    iterations: int
    tree_size: int


@dataclass
class MetaResult:
    best_trajectory: Optional[Trajectory]
    cost_sequence: list = field(default_factory=list)     # CostEvent per improvement
    iterations_run: int = 0
    termination: str = BUDGET
    planner: Optional[TreePlanner] = field(default=None, repr=False)   # AO only

    @property
    def best_cost(self) -> float:
        return self.cost_sequence[-1].cost if self.cost_sequence else math.inf

    @property
    def costs(self) -> list:
        return [e.cost for e in self.cost_sequence]

    @property
    def improvements(self) -> int:
        """Successful tightening rounds after the first solution."""
        return max(len(self.cost_sequence) - 1, 0)


def _record(result: MetaResult, cost: float, traj: Trajectory, t0: float,
            iterations: int, tree_size: int, on_event) -> None:
    if result.cost_sequence and not cost < result.best_cost - 1e-12:
        raise AssertionError(f"cost did not decrease: {result.best_cost} -> {cost}")
    ev = CostEvent(len(result.cost_sequence), float(cost), time.monotonic() - t0,
                   iterations, tree_size)
    result.cost_sequence.append(ev)
    result.best_trajectory = traj
    if on_event is not None:
        on_event(ev)


def bounded_suboptimal(P: ControlSystem, eps: float, A: Callable,
                       budget: Optional[Budget] = None, on_event=None) -> MetaResult:
    """Complete-planner loop returning a path within ``eps`` of optimal.

    ``A(cbar)`` must return ``(trajectory, cost)`` for some path with cost at
    most ``cbar``, or None when no such path exists. ``budget`` caps the
    number of calls to ``A`` (the deadline is honored too).
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    budget = budget or Budget()
    t0 = time.monotonic()
    result = MetaResult(None)
    budget.used += 1
    first = A(math.inf)
    result.iterations_run = 1
    if first is None:
        result.termination = INFEASIBLE
        return result
    _record(result, first[1], first[0], t0, 1, 0, on_event)
    while True:
        if budget.exhausted():
            result.termination = BUDGET
            return result
        budget.used += 1
        result.iterations_run += 1
        nxt = A(result.best_cost - eps)
        if nxt is None:
            result.termination = NO_SOLUTION
            return result
        _record(result, nxt[1], nxt[0], t0, result.iterations_run, 0, on_event)


def ao_plan(P: ControlSystem, kind: str, cfg: Optional[PlannerConfig], budget: Budget,
            rng: Optional[np.random.Generator] = None, on_event=None,
            on_iteration=None) -> MetaResult:
    """Anytime state-cost planning with a retained, pruned tree.

    Each new solution of cost ``c`` sets the bound to ``c``: the tree is
    pruned with ``c + h(x) > c``, indices are rebuilt (rescaling the EST cost
    axis), and the search continues for a path cheaper than ``c``.
    """
    planner = TreePlanner(kind, lift(P), cfg, rng)
    t0 = time.monotonic()
    result = MetaResult(None)
    bound = math.inf
    while True:
        goal = CostBoundedGoal(bound - IMPROVEMENT_MARGIN if math.isfinite(bound) else math.inf)
        res = planner.plan(goal, budget, on_iteration)
        if not res.solved:
            break
        _record(result, res.cost, res.trajectory, t0, planner.iterations,
                len(planner.tree), on_event)
        bound = res.cost
        planner.prune(bound)
    result.iterations_run = planner.iterations
    result.termination = BUDGET if result.cost_sequence else NO_SOLUTION
    result.planner = planner
    return result


DEFAULT_CALL_ITERATIONS = 50_000


def m_x_plan(P: ControlSystem, kind: str, cfg: Optional[PlannerConfig], budget: Budget,
             prune: bool = False, rng: Optional[np.random.Generator] = None,
             call_iterations: Optional[int] = DEFAULT_CALL_ITERATIONS,
             on_event=None, on_iteration=None) -> MetaResult:
    """Restart baseline: fresh tree and unbounded goal on every call.

    With ``prune`` the fresh tree rejects extensions with ``c + h(x)`` above
    the incumbent cost. ``call_iterations`` caps each call.
    """
    rng = rng if rng is not None else np.random.default_rng()
    sys = lift(P)
    t0 = time.monotonic()
    result = MetaResult(None)
    total = 0
    while not budget.exhausted():
        planner = TreePlanner(kind, sys, cfg, rng)
        if prune and result.cost_sequence:
            planner.prune(result.best_cost)
        res = planner.plan(CostBoundedGoal(math.inf), budget, on_iteration, limit=call_iterations)
        total += planner.iterations
        if res.solved and res.cost < result.best_cost - IMPROVEMENT_MARGIN:
            _record(result, res.cost, res.trajectory, t0, total, len(planner.tree), on_event)
    result.iterations_run = total
    result.termination = BUDGET if result.cost_sequence else NO_SOLUTION
    return result


@dataclass
class ShrinkageEstimate:
    """Mean next-solution cost under a bound and the implied shrink factor.

    ``w_hat = 1 - (mean - C*) / (cbar - C*)``; ``w_lower`` is its one-sided
    lower confidence limit from a t interval on the mean.
    """

    cbar: float
    c_star: float
    costs: list
    excluded: int
    mean: float
    w_hat: float
    w_lower: float
    confidence: float


def shrinkage_diagnostic(P: ControlSystem, kind: str, cfg: Optional[PlannerConfig],
                         cbar: float, n_trials: int, rng: np.random.Generator,
                         c_star: float, trial_budget: Callable[[], Budget],
                         confidence: float = 0.95) -> ShrinkageEstimate:
    """Run ``n_trials`` independent inner calls against the goal bounded by ``cbar``.

    Each trial starts a fresh tree pruned at ``cbar``; trials that exhaust
    ``trial_budget()`` are excluded and counted.
    """
    sys = lift(P)
    costs = []
    excluded = 0
    for _ in range(n_trials):
        planner = TreePlanner(kind, sys, cfg, rng)
        planner.prune(cbar)
        res = planner.plan(CostBoundedGoal(cbar), trial_budget())
        if res.solved:
            costs.append(res.cost)
        else:
            excluded += 1
    if not costs:
        return ShrinkageEstimate(cbar, c_star, [], excluded, math.nan, math.nan, math.nan,
                                 confidence)
    arr = np.asarray(costs)
    mean = float(arr.mean())
    gap = cbar - c_star
    w_hat = 1.0 - (mean - c_star) / gap if math.isfinite(gap) else math.nan
    if len(arr) > 1 and math.isfinite(gap):
        sem = float(arr.std(ddof=1)) / math.sqrt(len(arr))
        upper = mean + float(stats.t.ppf(confidence, len(arr) - 1)) * sem
        w_lower = 1.0 - (upper - c_star) / gap
    else:
        w_lower = math.nan
    return ShrinkageEstimate(cbar, c_star, costs, excluded, mean, w_hat, w_lower, confidence)


def est_runtime_bound(g: float, alpha: float, beta: float) -> tuple:
    """Expected-samples bound for EST with goal volume fraction ``g``.

    Returns ``(gamma, delta, bound)`` with ``gamma = 8/beta`` and
    ``delta = alpha*beta / (2 + 2*alpha*beta)``.
    """
    if not 0.0 < g < 1.0:
        raise ValueError(f"goal volume must be in (0, 1), got {g}")
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be > 0")
    gamma = 8.0 / beta
    delta = alpha * beta / (2.0 + 2.0 * alpha * beta)
    dg = delta * g
    bound = (math.log(gamma) + math.log(math.log(1.0 / g))) / dg + 1.0 / (-math.expm1(-dg))
    return gamma, delta, bound
