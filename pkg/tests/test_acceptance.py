"""The eleven acceptance criteria, each at its stated tolerance.

The long criteria (3, 4, 5, 7, 10) run 60 s or 30 s trials over 10 seeds on
one core, so this module takes close to two hours. Trials are cached so that
criteria sharing a configuration (AO-EST on Kink for 3 and 4) run it once.
A pass/fail line per criterion is printed in the terminal summary.
"""
import math
import time
from itertools import combinations

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from aoplan.dynamics import Trajectory, check_segment_feasible, integrate, replay_feasible
from aoplan.harness import RunConfig, emit_csv, emit_fig4_curves, run_benchmark
from aoplan.meta import ao_plan, bounded_suboptimal, m_x_plan, shrinkage_diagnostic
from aoplan.nn_index import DensityGrid, KdTree
from aoplan.planners import Budget, TreePlanner
from aoplan.problems import FLAPPY_LOW, FLAPPY_VX, PROBLEMS, make_problem
from aoplan.statecost import CostBoundedGoal, lift

from gridworld import dijkstra, product_bfs, random_world

SEEDS = range(10)
SECONDS = 60.0

_trials: dict = {}


def trial(problem: str, planner: str, seed: int, seconds: float = SECONDS):
    key = (problem, planner, seed, seconds)
    if key not in _trials:
        P = make_problem(problem)
        kind = "rrt" if "rrt" in planner else "est"
        rng = np.random.default_rng(seed)
        budget = Budget.seconds(seconds)
        if planner.startswith("ao-"):
            res = ao_plan(P, kind, None, budget, rng)
        else:
            res = m_x_plan(P, kind, None, budget, planner.endswith("-prune"), rng)
        res.planner = None          # drop the tree, keep the memory flat
        _trials[key] = res
        print(f"{problem} {planner} seed {seed}: {len(res.costs)} solutions, "
              f"best {res.best_cost:.6g}", flush=True)
    return _trials[key]


def final_costs(problem, planner):
    return np.array([trial(problem, planner, s).best_cost for s in SEEDS])


# -- 1 -------------------------------------------------------------------------------

def _exact_cost_integral(P, x0, u, d) -> float:
    """Incremental cost of one segment without the library's rollout."""
    name = P.name
    if name in ("dubins", "double_integrator", "pendulum"):
        return d                                    # minimum time
    if name in ("kink", "bugtrap"):
        return d * math.hypot(u[0], u[1])           # unit speed, length = time
    a = -1.0 + 4.0 * float(u[0])
    vy = lambda t: x0[2] + a * t
    speed = lambda t: math.hypot(FLAPPY_VX, vy(t))
    if name == "flappy":
        return quad(speed, 0.0, d, epsabs=0, epsrel=1e-13, limit=200)[0]
    y = lambda t: x0[1] + x0[2] * t + 0.5 * a * t * t
    coeffs = np.trim_zeros([0.5 * a, x0[2], x0[1] - FLAPPY_LOW], "f")
    roots = np.roots(coeffs) if len(coeffs) > 1 else []
    knots = [0.0] + sorted(r.real for r in roots if abs(r.imag) < 1e-9 and 0 < r.real < d) + [d]
    total = 0.0
    for lo, hi in zip(knots, knots[1:]):
        if hi > lo and y(0.5 * (lo + hi)) < FLAPPY_LOW:
            total += quad(speed, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
    return total


@pytest.mark.criterion(1, "state-cost equivalence on every benchmark")
def test_c1_state_cost_equivalence(report):
    t0 = time.monotonic()
    worst = 0.0
    agree = 0
    infeasible = 0
    for name in PROBLEMS:
        P = make_problem(name)
        L = lift(P)
        rng = np.random.default_rng(100)
        for _ in range(100):
            z = L.start
            base = Trajectory(P.start)
            exact = 0.0
            base_ok = lifted_ok = True
            for _ in range(int(rng.integers(1, 9))):
                u, d = P.sample_control(base.end, rng)
                zs = integrate(L, z, u, d)
                lifted_ok &= check_segment_feasible(L, zs)
                exact += _exact_cost_integral(P, base.end, u, d)
                base.append(P, u, d)
                z = zs[-1]
            base_ok = replay_feasible(P, base)
            infeasible += not base_ok
            agree += base_ok == lifted_ok
            assert np.array_equal(z[:-1], base.end)
            rel = abs(z[-1] - exact) / max(exact, 1e-300)
            worst = max(worst, rel if exact > 0 else abs(z[-1]))
    elapsed = time.monotonic() - t0
    report(f"worst relative cost error {worst:.2e}, feasibility agreed {agree}/700 "
           f"({infeasible} infeasible), {elapsed:.1f} s")
    assert worst <= 1e-9
    assert agree == 100 * len(PROBLEMS)
    assert infeasible > 0
    assert elapsed < 10.0


# -- 2 -------------------------------------------------------------------------------

@pytest.mark.criterion(2, "bounded-suboptimal loop on gridworld")
def test_c2_bounded_suboptimal(report):
    t0 = time.monotonic()
    rng = np.random.default_rng(2)
    worlds = [random_world(rng) for _ in range(20)]
    slack = []
    for eps in (1.0, 2.0, 5.0):
        for w in worlds:
            c_star = dijkstra(w)
            res = bounded_suboptimal(None, eps, lambda cbar: product_bfs(w, cbar))
            c0 = res.costs[0]
            cap = math.ceil((c0 - c_star) / eps)
            assert res.best_cost <= c_star + eps
            assert res.improvements <= cap
            slack.append(cap - res.improvements)
    elapsed = time.monotonic() - t0
    report(f"60 runs, min slack to iteration cap {min(slack)}, {elapsed:.2f} s")
    assert elapsed < 5.0


# -- 3 -------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(3, "AO-EST within 5% and AO-RRT within 10% of the Kink grid oracle")
def test_c3_kink_convergence(report):
    P = make_problem("kink")
    grid, exact = P.params["grid_optimum"], P.params["optimum"]
    est = final_costs("kink", "ao-est")
    rrt = final_costs("kink", "ao-rrt")
    gap_est = abs(est.mean() - grid) / grid
    gap_rrt = abs(rrt.mean() - grid) / grid
    report(f"AO-EST mean {est.mean():.4f} ({gap_est:.1%} from grid oracle, "
           f"{est.mean() / exact - 1:.1%} above exact), AO-RRT mean {rrt.mean():.4f} "
           f"({gap_rrt:.1%})")
    assert np.all(est >= exact) and np.all(rrt >= exact)
    assert gap_est <= 0.05
    assert gap_rrt <= 0.10


# -- 4 -------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(4, "AO-EST beats M-EST and M-EST-Prune on Kink and Bugtrap")
def test_c4_comparative_ordering(report):
    parts = []
    ok = True
    for problem in ("kink", "bugtrap"):
        ao = final_costs(problem, "ao-est").mean()
        m = final_costs(problem, "m-est").mean()
        mp = final_costs(problem, "m-est-prune").mean()
        opt = make_problem(problem).params["optimum"]
        for planner in ("ao-est", "m-est", "m-est-prune"):
            assert np.all(final_costs(problem, planner) >= opt)
        parts.append(f"{problem}: AO {ao:.4f}, M {m:.4f}, M-Prune {mp:.4f}")
        ok &= ao <= m and ao <= mp
    report("; ".join(parts))
    assert ok


# -- 5 -------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(5, "pendulum swing-up with AO-RRT")
def test_c5_pendulum(report):
    runs = [trial("pendulum", "ao-rrt", s) for s in SEEDS]
    solved = sum(bool(r.costs) for r in runs)
    for r in runs:
        assert all(b < a for a, b in zip(r.costs, r.costs[1:]))
    deep = [r.costs for r in runs if len(r.costs) >= 5]
    c1 = np.mean([c[0] for c in deep]) if deep else math.nan
    c5 = np.mean([c[4] for c in deep]) if deep else math.nan
    drop = 1 - c5 / c1 if deep else math.nan
    report(f"{solved}/10 seeds solved, {len(deep)} with >= 5 solutions, "
           f"mean c1 {c1:.3f} s, mean c5 {c5:.3f} s, drop {drop:.1%}")
    assert solved >= 9
    if deep:
        assert drop >= 0.20


# -- 6 -------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(6, "shrinkage factor positive on Kink at 1.2 C*")
def test_c6_shrinkage(report):
    P = make_problem("kink")
    c_star = P.params["optimum"]
    est = shrinkage_diagnostic(P, "est", None, 1.2 * c_star, 50, np.random.default_rng(6),
                               c_star, lambda: Budget.seconds(30))
    report(f"{len(est.costs)} solved, {est.excluded} excluded, mean {est.mean:.4f}, "
           f"w_hat {est.w_hat:.3f}, 95% lower limit {est.w_lower:.3f}")
    assert all(c <= 1.2 * c_star for c in est.costs)
    assert est.w_lower > 0


# -- 7 -------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(7, "no path below 0.9 C* on Kink")
def test_c7_infeasibility_boundary(report):
    P = make_problem("kink")
    cbar = 0.9 * P.params["grid_optimum"]
    sys = lift(P)
    found = 0
    sizes = []
    for seed in SEEDS:
        planner = TreePlanner("est", sys, None, np.random.default_rng(seed))
        planner.prune(cbar)
        res = planner.plan(CostBoundedGoal(cbar), Budget.seconds(30.0))
        found += res.solved
        sizes.append(planner.iterations)
    report(f"cbar {cbar:.4f}: {found} paths found, mean {np.mean(sizes):.0f} iterations per seed")
    assert found == 0


# -- 8 -------------------------------------------------------------------------------

@pytest.mark.criterion(8, "EST runtime-bound curves")
def test_c8_fig4(report, tmp_path):
    text = emit_fig4_curves(tmp_path / "fig4.csv")
    rows = [line.split(",") for line in text.splitlines()[1:]]
    mpmath.mp.dps = 40
    worst = 0.0
    for i in np.linspace(0, len(rows) - 1, 20).astype(int):
        label, a, b, g, _, _, n, _ = rows[i]
        a, b, g = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(g)
        d = a * b / (2 + 2 * a * b)
        ref = (mpmath.log(8 / b) + mpmath.log(mpmath.log(1 / g))) / (d * g) + 1 / (1 - mpmath.exp(-d * g))
        worst = max(worst, float(abs(mpmath.mpf(n) - ref) / ref))
    curves = {}
    for label, _, _, g, _, _, n, _ in rows:
        curves.setdefault(label, []).append(float(n))
    ordered = all(e < m < h for e, m, h in zip(curves["easy"], curves["medium"], curves["hard"]))
    monotone = all(all(x > y for x, y in zip(c, c[1:])) for c in curves.values())
    report(f"worst spot relative error {worst:.1e}; ordered {ordered}; monotone {monotone}")
    assert worst <= 1e-12
    assert ordered and monotone


# -- 9 -------------------------------------------------------------------------------

def _oracle_distances(pts, q, w, ang):
    d = np.abs(pts - q)
    if ang:
        d[:, ang] = np.mod(d[:, ang], 2 * np.pi)
        d[:, ang] = np.minimum(d[:, ang], 2 * np.pi - d[:, ang])
    return np.sqrt((d * d) @ w)


def _random_lifted(P, rng, cost_hi):
    lo, hi = P.state_bounds.lo, P.state_bounds.hi
    x = rng.uniform(lo, hi)
    for a in P.metric.angular_axes:
        x[a] += 2 * np.pi * rng.integers(-2, 3)        # unwrapped angles
    return np.append(x, rng.uniform(0, cost_hi))


METRIC_SYSTEMS = ("kink", "dubins", "double_integrator", "pendulum", "flappy")


def _kd_fuzz(P, wc, rng, n_ops=10_000):
    metric = P.metric.extended(wc)
    tree = KdTree(metric)
    w = metric.weights
    ang = list(metric.angular_axes)
    ids, pts = [], []
    mismatches = 0
    next_id = 0
    for _ in range(n_ops):
        r = rng.random()
        if r < 0.55 or not ids:
            z = _random_lifted(P, rng, P.cost_scale)
            tree.insert(next_id, z)
            ids.append(next_id)
            pts.append(z)
            next_id += 1
        elif r < 0.9:
            q = _random_lifted(P, rng, P.cost_scale)
            zero_cost = rng.random() < 0.2
            wq = np.append(w[:-1], 0.0) if zero_cost else w
            got, got_d = tree.nearest(q, wq if zero_cost else None)
            d = _oracle_distances(np.array(pts), q, wq, ang)
            best = d.min()
            true_d = d[ids.index(got)]
            if true_d > best * (1 + 1e-12) + 1e-300 or abs(got_d - true_d) > 1e-12 * max(1.0, true_d):
                mismatches += 1
        else:
            k = int(rng.integers(len(ids)))
            tree.remove(ids[k])
            ids.pop(k)
            pts.pop(k)
    return mismatches


def _density_fuzz(P, rng, n_ops=10_000):
    sys = lift(P)
    bounds = P.state_bounds.append_axis(0.0, P.cost_scale)
    ang = list(P.metric.angular_axes)
    grid = DensityGrid(bounds, 0.1, 3, ang)
    lo, width = bounds.lo, bounds.width
    projections = [list(c) for c in combinations(range(bounds.dim), 3)] \
        if bounds.dim >= 3 else [list(range(bounds.dim))]

    def cell(zs):
        zs = np.array(zs, dtype=float).reshape(-1, bounds.dim)
        zs[:, ang] = np.mod(zs[:, ang], 2 * np.pi)
        return np.floor((zs - lo) / width / 0.1)

    live = []
    cells = np.empty((0, bounds.dim))
    mismatches = 0
    for _ in range(n_ops):
        r = rng.random()
        if r < 0.5 or not live:
            z = _random_lifted(P, rng, P.cost_scale)
            grid.insert(len(live), z)
            live.append(z)
            cells = np.vstack([cells, cell(z)])
        elif r < 0.98:
            z = live[int(rng.integers(len(live)))] if rng.random() < 0.5 \
                else _random_lifted(P, rng, P.cost_scale)
            c = cell(z)[0]
            ref = sum(int(np.all(cells[:, p] == c[p], axis=1).sum()) for p in projections)
            mismatches += grid.count(z) != ref
        else:
            # prune a random half, as a meta-iteration boundary does
            keep = rng.random(len(live)) < 0.5
            live = [z for z, k in zip(live, keep) if k]
            cells = cells[keep]
            grid.rebuild(list(enumerate(live)))
    occupied = {m for ms in grid.occupancy().values() for m in ms}
    assert occupied == set(range(len(live)))
    return mismatches


@pytest.mark.slow
@pytest.mark.criterion(9, "KD-tree and density-grid fuzz against oracles")
def test_c9_index_exactness(report):
    rng = np.random.default_rng(9)
    kd_bad = 0
    suites = 0
    for name in METRIC_SYSTEMS:
        P = make_problem(name)
        for wc in (0.1, 0.3, 1.0, 3.0, 10.0):
            kd_bad += _kd_fuzz(P, wc, rng)
            suites += 1
    grid_bad = sum(_density_fuzz(make_problem(name), rng) for name in METRIC_SYSTEMS)
    report(f"{suites} KD suites, {len(METRIC_SYSTEMS)} density suites of 10^4 ops: "
           f"{kd_bad} KD mismatches, {grid_bad} density mismatches")
    assert kd_bad == 0 and grid_bad == 0


# -- 10 ------------------------------------------------------------------------------

def low_fraction(P, t: Trajectory) -> float:
    """Share of arc length below the altitude line, from a dense polyline."""
    pts = [P.propagate(s.x_from, s.u, np.linspace(0.0, s.duration, 400)) for s in t.segments]
    pts = np.vstack(pts)
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    mid = 0.5 * (pts[1:, 1] + pts[:-1, 1])
    return float(seg[mid < FLAPPY_LOW].sum() / seg.sum())


@pytest.mark.slow
@pytest.mark.criterion(10, "Flappy low-altitude cost flies higher than length cost")
def test_c10_flappy(report):
    frac = {}
    for problem in ("flappy", "flappy-low"):
        P = make_problem(problem)
        runs = [trial(problem, "ao-rrt", s) for s in SEEDS]
        frac[problem] = [low_fraction(P, r.best_trajectory) for r in runs if r.best_trajectory]
    a, b = np.mean(frac["flappy"]), np.mean(frac["flappy-low"])
    report(f"mean fraction below y=300: length cost {a:.3f} ({len(frac['flappy'])} paths), "
           f"low-altitude cost {b:.3f} ({len(frac['flappy-low'])} paths)")
    assert len(frac["flappy"]) == len(frac["flappy-low"]) == 10
    assert b < a


# -- 11 ------------------------------------------------------------------------------

def _strip_wall(text: str) -> list:
    col = 3          # wall_s
    return [",".join(r.split(",")[:col] + r.split(",")[col + 1:]) for r in text.splitlines()]


DETERMINISM_RUNS = [(p, "ao-rrt", 1500) for p in PROBLEMS] + \
    [(p, "ao-est", 600) for p in PROBLEMS] + \
    [("kink", planner, 20_000) for planner in ("m-rrt", "m-rrt-prune", "m-est", "m-est-prune")]


@pytest.mark.slow
@pytest.mark.criterion(11, "reruns are identical")
def test_c11_determinism(report):
    checked = 0
    events = 0
    for problem, planner, iters in DETERMINISM_RUNS:
        cfg = RunConfig(problem=problem, planner=planner, runs=2, base_seed=11,
                        max_iterations=iters, sample_every=max(iters // 10, 1),
                        call_iterations=iters // 4)
        first, second = run_benchmark(cfg), run_benchmark(cfg)
        assert _strip_wall(emit_csv(first)) == _strip_wall(emit_csv(second)), (problem, planner)
        for a, b in zip(first, second):
            assert a.costs == b.costs and a.iterations == b.iterations
            events += len(a.costs)
        checked += 1
    # under a wall-clock limit the runs stop at different points, but the
    # events they share are identical
    a = trial("kink", "ao-est", 0, 3.0)
    _trials.pop(("kink", "ao-est", 0, 3.0))
    b = trial("kink", "ao-est", 0, 3.0)
    n = min(len(a.costs), len(b.costs))
    assert n > 0 and a.costs[:n] == b.costs[:n]
    assert [e.iterations for e in a.cost_sequence[:n]] == [e.iterations for e in b.cost_sequence[:n]]
    report(f"{checked} configurations x 2 seeds rerun, {events} events identical; "
           f"timed reruns share {n} identical events")
