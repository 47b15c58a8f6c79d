"""Asymptotically optimal kinodynamic planning by search in state-cost space."""
from .dynamics import ControlSystem, Trajectory, trajectory_cost
from .planners import Budget, PlannerConfig, TreePlanner, plan_feasible
from .problems import PROBLEMS, make_problem
from .statecost import CostBoundedGoal, LiftedSystem, lift

__version__ = "0.1.0"
