"""The six benchmark problems: Kink, Bugtrap, Dubins, double integrator,
pendulum swing-up and Flappy.

Rectangle-world layouts (Kink, Bugtrap, Flappy) are read from the versioned
fixture files in ``aoplan/fixtures``. Every factory returns a fresh
:class:`ControlSystem`; nothing here holds mutable state.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import ControlSystem
from .geometry import RectWorld, load_world
from .space import TWO_PI, BoxBounds, Metric, angle_diff

MAX_EXPANSION = 0.15


# -- planar kinematic point ----------------------------------------------------

class PlanarPoint(ControlSystem):
    """Kinematic point whose segments are straight chords.

    ``rollout`` is specialised to the two endpoints; it performs the same
    floating-point operations as the generic closed-form path.
    """

    def rollout(self, x0, u, duration: float):
        if duration < 0:
            raise ValueError(f"negative duration {duration}")
        x, y = float(x0[0]), float(x0[1])
        ux, uy = float(u[0]), float(u[1])
        if duration == 0:
            return np.array([[x, y]]), np.zeros(1)
        states = np.array([[x, y], [duration * ux + x, duration * uy + y]])
        return states, np.array([0.0, duration * math.hypot(ux, uy)])


def _kinematic(world: RectWorld, max_expansion: float = MAX_EXPANSION,
               cost_scale: float = 2.0) -> ControlSystem:
    """Straight-line moves of length at most ``max_expansion``.

    The control is a unit direction held for a duration equal to the move's
    length, so time equals path length and ``L = |u| = 1``.
    """
    goal_lo, goal_hi = world.goal_box()

    def propagate(x0, u, ts):
        return np.outer(ts, u) + x0

    def segment_cost(x0, u, ts):
        return ts * math.hypot(u[0], u[1])

    def sample_control(x, rng):
        a = TWO_PI * rng.random()
        return np.array([math.cos(a), math.sin(a)]), max_expansion * (1.0 - rng.random())

    def steer(x, target, rng):
        dx, dy = float(target[0] - x[0]), float(target[1] - x[1])
        dist = math.hypot(dx, dy)
        if dist == 0.0:
            return sample_control(x, rng)
        step = min(max_expansion * (1.0 - rng.random()), dist)
        return np.array([dx / dist, dy / dist]), step

    def segment_feasible(states):
        (ax, ay), (bx, by) = states[0, :2].tolist(), states[-1, :2].tolist()
        return world._chord_free(ax, ay, bx, by)

    return PlanarPoint(
        name=world.name,
        state_bounds=BoxBounds(world.lo, world.hi),
        dim_control=2,
        start=np.array(world.start[:2]),
        derivative=lambda x, u: np.asarray(u, dtype=float),
        incremental_cost=lambda x, u: math.hypot(u[0], u[1]),
        sample_control=sample_control,
        feasible=world.point_free,
        in_goal=world.in_goal,
        # segments are straight, so checking the chord between endpoints is exact
        dt=math.inf,
        propagate=propagate,
        segment_cost=segment_cost,
        segment_feasible=segment_feasible,
        steer=steer,
        goal_bounds=BoxBounds(goal_lo, goal_hi),
        metric=Metric.euclidean(2),
        heuristic=world.distance_to_goal,
        cost_scale=cost_scale,
        params={"world": world, "max_expansion": max_expansion,
                "optimum": world.optimum, "grid_optimum": world.grid_optimum},
    )


def make_kink(fixtures_dir: Optional[Path] = None, max_expansion: float = MAX_EXPANSION):
    return _kinematic(load_world("kink", fixtures_dir), max_expansion)


def make_bugtrap(fixtures_dir: Optional[Path] = None, max_expansion: float = MAX_EXPANSION):
    return _kinematic(load_world("bugtrap", fixtures_dir), max_expansion)


# -- Dubins car ----------------------------------------------------------------

DUBINS_MIN_RADIUS = 0.15
DUBINS_METRIC = Metric(np.array([1.0, 1.0, 1.0 / TWO_PI]), angular_axes=(2,))


def make_dubins(min_radius: float = DUBINS_MIN_RADIUS, max_duration: float = 0.25):
    """Sideways move of 0.4 with heading held, minimum time.

    Unit-wheelbase car: ``theta' = v tan(phi)`` with ``phi`` clamped so that
    the turning radius never drops below ``min_radius``.
    """
    phi_max = math.atan(1.0 / min_radius)
    start = np.array([0.5, 0.3, 0.0])
    goal = np.array([0.5, 0.7, 0.0])
    tol = 0.1

    def curvature(u):
        return math.tan(min(max(float(u[1]), -phi_max), phi_max))

    def derivative(x, u):
        v = float(u[0])
        return np.array([v * math.cos(x[2]), v * math.sin(x[2]), v * curvature(u)])

    def propagate(x0, u, ts):
        v = float(u[0])
        k = curvature(u)
        th = x0[2] + v * k * ts
        out = np.empty((len(ts), 3))
        if abs(k) < 1e-9:
            out[:, 0] = x0[0] + v * ts * math.cos(x0[2])
            out[:, 1] = x0[1] + v * ts * math.sin(x0[2])
        else:
            out[:, 0] = x0[0] + (np.sin(th) - math.sin(x0[2])) / k
            out[:, 1] = x0[1] - (np.cos(th) - math.cos(x0[2])) / k
        out[:, 2] = th
        return out

    def segment_cost(x0, u, ts):
        return np.array(ts, dtype=float)

    def sample_control(x, rng):
        v = 1.0 if rng.random() < 0.5 else -1.0
        return np.array([v, rng.uniform(-math.pi, math.pi)]), rng.uniform(0.0, max_duration)

    def feasible(x):
        return 0.0 <= x[0] <= 1.0 and 0.0 <= x[1] <= 1.0

    def segment_feasible(states):
        xy = states[:, :2]
        return bool(np.all((xy >= 0.0) & (xy <= 1.0)))

    def in_goal(x):
        return DUBINS_METRIC.distance(np.asarray(x, dtype=float), goal) <= tol

    def heuristic(x):
        x = np.asarray(x, dtype=float)
        d = np.sqrt((x[..., 0] - goal[0]) ** 2 + (x[..., 1] - goal[1]) ** 2)
        return np.maximum(d - tol, 0.0)

    return ControlSystem(
        name="dubins",
        state_bounds=BoxBounds([0.0, 0.0, 0.0], [1.0, 1.0, TWO_PI]),
        dim_control=2,
        start=start,
        derivative=derivative,
        incremental_cost=lambda x, u: 1.0,
        sample_control=sample_control,
        feasible=feasible,
        in_goal=in_goal,
        dt=0.01,
        propagate=propagate,
        segment_cost=segment_cost,
        segment_feasible=segment_feasible,
        goal_bounds=BoxBounds(goal - [tol, tol, tol * math.sqrt(TWO_PI)],
                              goal + [tol, tol, tol * math.sqrt(TWO_PI)]),
        metric=DUBINS_METRIC,
        heuristic=heuristic,
        cost_scale=3.0,
        params={"min_radius": min_radius, "phi_max": phi_max, "goal": goal, "tolerance": tol},
    )


# -- double integrator ---------------------------------------------------------

def make_double_integrator(max_duration: float = 0.05):
    """Point mass in the unit square, ``q' = v, v' = u``, minimum time.

    Velocity box is [-1, 1]^2; a literal "[-1,-1]^2" box would be empty.
    """
    start = np.array([0.06, 0.5, 0.0, 0.0])
    goal = np.array([0.94, 0.5, 0.0, 0.0])
    tol = 0.2
    lo = np.array([0.0, 0.0, -1.0, -1.0])
    hi = np.array([1.0, 1.0, 1.0, 1.0])

    def derivative(x, u):
        return np.array([x[2], x[3], u[0], u[1]])

    def propagate(x0, u, ts):
        u = np.asarray(u, dtype=float)
        t = ts[:, None]
        out = np.empty((len(ts), 4))
        out[:, :2] = x0[None, :2] + x0[None, 2:] * t + 0.5 * u[None, :] * t * t
        out[:, 2:] = x0[None, 2:] + u[None, :] * t
        return out

    def segment_cost(x0, u, ts):
        return np.array(ts, dtype=float)

    def sample_control(x, rng):
        return rng.uniform(-5.0, 5.0, size=2), rng.uniform(0.0, max_duration)

    def feasible(x):
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def segment_feasible(states):
        return bool(np.all((states >= lo) & (states <= hi)))

    def in_goal(x):
        return float(np.linalg.norm(np.asarray(x, dtype=float) - goal)) <= tol

    def heuristic(x):
        # reaching the goal ball needs every |q_i - g_i| <= tol, at speed <= 1 per axis
        x = np.asarray(x, dtype=float)
        gap = np.max(np.abs(x[..., :2] - goal[:2]), axis=-1) - tol
        return np.maximum(gap, 0.0)

    return ControlSystem(
        name="double_integrator",
        state_bounds=BoxBounds(lo, hi),
        dim_control=2,
        start=start,
        derivative=derivative,
        incremental_cost=lambda x, u: 1.0,
        sample_control=sample_control,
        feasible=feasible,
        in_goal=in_goal,
        dt=0.01,
        propagate=propagate,
        segment_cost=segment_cost,
        segment_feasible=segment_feasible,
        goal_bounds=BoxBounds(np.maximum(goal - tol, lo), np.minimum(goal + tol, hi)),
        metric=Metric.euclidean(4),
        heuristic=heuristic,
        cost_scale=3.0,
        params={"goal": goal, "tolerance": tol},
    )


# -- pendulum --------------------------------------------------------------------

GRAVITY = 9.8
TORQUES = (-2.0, 0.0, 2.0)
PENDULUM_MAX_SPEED = 8.0


def pendulum_derivative(x, u):
    return np.array([x[1], -GRAVITY * math.sin(x[0]) + u[0]])


def make_pendulum(max_duration: float = 0.5, dt: float = 0.01,
                  max_speed: float = PENDULUM_MAX_SPEED):
    """Torque-limited swing-up to within 10 degrees of inverted, minimum time.

    The angle is stored unwrapped; it is only wrapped for the metric, the
    density grid and the goal test.
    """
    theta_tol = math.radians(10.0)
    omega_tol = 0.5

    def sample_control(x, rng):
        return np.array([TORQUES[int(rng.integers(3))]]), rng.uniform(0.0, max_duration)

    def feasible(x):
        return abs(x[1]) <= max_speed

    def segment_feasible(states):
        return bool(np.all(np.abs(states[:, 1]) <= max_speed))

    def in_goal(x):
        return bool(angle_diff(x[0], math.pi) <= theta_tol and abs(x[1]) < omega_tol)

    return ControlSystem(
        name="pendulum",
        state_bounds=BoxBounds([0.0, -max_speed], [TWO_PI, max_speed]),
        dim_control=1,
        start=np.zeros(2),
        derivative=pendulum_derivative,
        incremental_cost=lambda x, u: 1.0,
        sample_control=sample_control,
        feasible=feasible,
        in_goal=in_goal,
        dt=dt,
        segment_feasible=segment_feasible,
        goal_bounds=BoxBounds([math.pi - theta_tol, -omega_tol], [math.pi + theta_tol, omega_tol]),
        metric=Metric(np.ones(2), angular_axes=(0,)),
        cost_scale=10.0,
        params={"theta_tol": theta_tol, "omega_tol": omega_tol, "max_speed": max_speed},
    )


# -- Flappy ----------------------------------------------------------------------

FLAPPY_VX = 5.0
FLAPPY_LOW = 300.0
FLAPPY_MAX_VY = 40.0


def _arc_primitive(v):
    # antiderivative of sqrt(VX^2 + v^2) in v
    v = np.asarray(v, dtype=float)
    s = FLAPPY_VX
    return 0.5 * (v * np.sqrt(s * s + v * v) + s * s * np.arcsinh(v / s))


def flappy_arc_length(vy0: float, a: float, ts) -> np.ndarray:
    """Arc length of the parabola ``x' = VX, vy' = a`` from 0 to each of ``ts``."""
    ts = np.asarray(ts, dtype=float)
    if a == 0.0:
        return math.hypot(FLAPPY_VX, vy0) * ts
    return (_arc_primitive(vy0 + a * ts) - _arc_primitive(vy0)) / a


def _low_crossings(y0: float, vy0: float, a: float, limit: float) -> list:
    # times t > 0 where y0 + vy0 t + a t^2 / 2 == limit
    if a == 0.0:
        return [(limit - y0) / vy0] if vy0 != 0.0 and (limit - y0) / vy0 > 0 else []
    disc = vy0 * vy0 - 2.0 * a * (y0 - limit)
    if disc < 0:
        return []
    r = math.sqrt(disc)
    return sorted(t for t in ((-vy0 - r) / a, (-vy0 + r) / a) if t > 0)


def flappy_low_length(y0: float, vy0: float, a: float, ts, limit: float = FLAPPY_LOW):
    """Arc length accrued where ``y < limit``, from 0 to each of ``ts``."""
    ts = np.asarray(ts, dtype=float)
    knots = [0.0] + _low_crossings(y0, vy0, a, limit)
    ends = knots[1:] + [math.inf]
    out = np.zeros_like(ts)
    for t0, t1 in zip(knots, ends):
        tm = t0 + 1.0 if math.isinf(t1) else 0.5 * (t0 + t1)
        if y0 + vy0 * tm + 0.5 * a * tm * tm >= limit:
            continue
        hi = np.clip(ts, t0, t1)
        out += flappy_arc_length(vy0, a, hi) - flappy_arc_length(vy0, a, t0)
    return out


def make_flappy(cost: str = "length", fixtures_dir: Optional[Path] = None,
                max_duration: float = 1.0, check_dt: float = 0.1):
    """Side-scrolling bird, ``x' = 5, y' = vy, vy' = -1 + 4u`` with ``u`` in {0, 1}.

    ``cost="length"`` charges path length; ``cost="low-altitude"`` charges
    only the path length travelled below y = 300.
    """
    if cost not in ("length", "low-altitude"):
        raise ValueError(f"unknown flappy cost {cost!r}")
    world = load_world("flappy", fixtures_dir)
    goal_lo, goal_hi = world.goal_box()
    vmax = FLAPPY_MAX_VY
    lo = np.array([world.domain[0], world.domain[2], -vmax])
    hi = np.array([world.domain[1], world.domain[3], vmax])

    def accel(u):
        return -1.0 + 4.0 * float(u[0])

    def derivative(x, u):
        return np.array([FLAPPY_VX, x[2], accel(u)])

    def propagate(x0, u, ts):
        a = accel(u)
        out = np.empty((len(ts), 3))
        out[:, 0] = x0[0] + FLAPPY_VX * ts
        out[:, 1] = x0[1] + x0[2] * ts + 0.5 * a * ts * ts
        out[:, 2] = x0[2] + a * ts
        return out

    if cost == "length":
        def incremental_cost(x, u):
            return math.hypot(FLAPPY_VX, x[2])

        def segment_cost(x0, u, ts):
            return flappy_arc_length(x0[2], accel(u), ts)

        def heuristic(x):
            return world.distance_to_goal(x)
    else:
        def incremental_cost(x, u):
            return math.hypot(FLAPPY_VX, x[2]) if x[1] < FLAPPY_LOW else 0.0

        def segment_cost(x0, u, ts):
            return flappy_low_length(x0[1], x0[2], accel(u), ts)

        def heuristic(x):
            return np.zeros(np.shape(x)[:-1])

    def sample_control(x, rng):
        return np.array([float(rng.integers(2))]), rng.uniform(0.0, max_duration)

    def feasible(x):
        return bool(abs(x[2]) <= vmax and world.point_free(x[:2]))

    def segment_feasible(states):
        if np.any(np.abs(states[:, 2]) > vmax):
            return False
        return world.polyline_free(states[:, :2])

    return ControlSystem(
        name="flappy" if cost == "length" else "flappy-low",
        state_bounds=BoxBounds(lo, hi),
        dim_control=1,
        start=np.array([world.start[0], world.start[1], 0.0]),
        derivative=derivative,
        incremental_cost=incremental_cost,
        sample_control=sample_control,
        feasible=feasible,
        in_goal=lambda x: world.in_goal(x[:2]),
        dt=check_dt,
        propagate=propagate,
        segment_cost=segment_cost,
        segment_feasible=segment_feasible,
        goal_bounds=BoxBounds(np.append(goal_lo, -vmax), np.append(goal_hi, vmax)),
        metric=Metric(np.array([1.0, 1.0, 25.0])),
        heuristic=heuristic,
        cost_scale=2000.0 if cost == "length" else 1000.0,
        params={"world": world, "cost": cost, "low_limit": FLAPPY_LOW},
    )


# -- registry --------------------------------------------------------------------

PROBLEMS = ("kink", "bugtrap", "dubins", "double_integrator", "pendulum", "flappy", "flappy-low")


def make_problem(name: str, fixtures_dir: Optional[Path] = None) -> ControlSystem:
    if name == "kink":
        return make_kink(fixtures_dir)
    if name == "bugtrap":
        return make_bugtrap(fixtures_dir)
    if name == "dubins":
        return make_dubins()
    if name in ("double_integrator", "double-integrator"):
        return make_double_integrator()
    if name == "pendulum":
        return make_pendulum()
    if name == "flappy":
        return make_flappy("length", fixtures_dir)
    if name == "flappy-low":
        return make_flappy("low-altitude", fixtures_dir)
    raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")
