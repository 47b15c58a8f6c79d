"""Seeded benchmark runs, cost-vs-time aggregation and CSV/JSON output.

    python -m aoplan.harness bench --problem kink --planner ao-est --runs 10
    python -m aoplan.harness sweep --problem pendulum --time-limit 60
    python -m aoplan.harness fig4 --out-dir results

Exit codes: 0 success, 2 configuration error, 3 missing fixture file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .meta import DEFAULT_CALL_ITERATIONS, ao_plan, est_runtime_bound, m_x_plan
from .planners import Budget, PlannerConfig
from .problems import PROBLEMS, make_problem

log = logging.getLogger("aoplan.harness")

PLANNERS = ("ao-rrt", "ao-est", "m-rrt", "m-rrt-prune", "m-est", "m-est-prune")
CSV_COLUMNS = ("problem", "planner", "seed", "wall_s", "best_cost", "tree_size", "meta_iter")
COST_WEIGHTS = (0.1, 0.3, 1.0, 3.0, 10.0)
FIG4_PAIRS = ((0.04, "easy"), (0.02, "medium"), (0.01, "hard"))
SAMPLES_PER_SECOND = 1000.0

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIXTURE = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "kink"
    planner: str = "ao-est"
    time_limit_s: float = 60.0
    runs: int = 10
    base_seed: int = 0
    cost_weight: Optional[float] = None
    goal_bias: Optional[float] = None
    # an iteration budget replaces the time limit and makes runs reproducible
    max_iterations: Optional[int] = None
    sample_every: int = 1000            # cadence (iterations) under an iteration budget
    cadence_s: float = 0.5              # cadence (seconds) under a time limit
    call_iterations: Optional[int] = DEFAULT_CALL_ITERATIONS
    out_dir: Optional[str] = None
    fixtures_dir: Optional[str] = None
    jobs: int = 1

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.planner not in PLANNERS:
            raise ConfigError(f"unknown planner {self.planner!r}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not self.time_limit_s > 0:
            raise ConfigError("time limit must be > 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            self.planner_config()
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return self

    def planner_config(self) -> PlannerConfig:
        kw = {}
        if self.cost_weight is not None:
            kw["cost_weight"] = self.cost_weight
        if self.goal_bias is not None:
            kw["goal_bias"] = self.goal_bias
        return PlannerConfig(**kw)

    @property
    def kind(self) -> str:
        return "rrt" if "rrt" in self.planner else "est"


@dataclass(frozen=True)
class Sample:
    wall_s: float
    best_cost: float
    tree_size: int
    meta_iter: int


@dataclass
class TrialRecord:
    problem: str
    planner: str
    seed: int
    samples: list = field(default_factory=list)
    iterations: int = field(default=0, compare=False)

    @property
    def final_cost(self) -> float:
        return self.samples[-1].best_cost if self.samples else math.inf

    @property
    def first_solution_s(self) -> float:
        for s in self.samples:
            if math.isfinite(s.best_cost):
                return s.wall_s
        return math.inf

    @property
    def costs(self) -> list:
        """Distinct best costs in the order they were found."""
        out = []
        for s in self.samples:
            if math.isfinite(s.best_cost) and (not out or s.best_cost < out[-1]):
                out.append(s.best_cost)
        return out

    def check(self) -> None:
        for a, b in zip(self.samples, self.samples[1:]):
            if b.wall_s < a.wall_s:
                raise AssertionError(f"seed {self.seed}: wall time went backwards")
            if b.best_cost > a.best_cost:
                raise AssertionError(f"seed {self.seed}: best cost increased")


# -- trials ------------------------------------------------------------------------

class _Recorder:
    """Collects cadence samples and improvement events during one trial."""

    def __init__(self, cfg: RunConfig, budget: Budget):
        self.cfg = cfg
        self.budget = budget
        self.t0 = time.monotonic()
        self.samples: list = []
        self.best = math.inf
        self.meta_iter = 0
        self.tree_size = 1
        self.next_tick = cfg.sample_every if cfg.max_iterations else cfg.cadence_s

    def _push(self, wall: float) -> None:
        self.samples.append(Sample(wall, self.best, self.tree_size, self.meta_iter))

    def on_iteration(self, planner) -> None:
        self.tree_size = len(planner.tree)
        if self.cfg.max_iterations:
            if self.budget.used >= self.next_tick:
                self._push(time.monotonic() - self.t0)
                self.next_tick += self.cfg.sample_every
        else:
            wall = time.monotonic() - self.t0
            if wall >= self.next_tick:
                self._push(wall)
                while self.next_tick <= wall:
                    self.next_tick += self.cfg.cadence_s

    def on_event(self, ev) -> None:
        self.best = ev.cost
        self.meta_iter = ev.meta_iter + 1
        self.tree_size = ev.tree_size
        self._push(time.monotonic() - self.t0)


def run_trial(cfg: RunConfig, seed: int) -> TrialRecord:
    P = make_problem(cfg.problem, cfg.fixtures_dir)
    rng = np.random.default_rng(seed)
    if cfg.max_iterations:
        budget = Budget.iterations(cfg.max_iterations)
    else:
        budget = Budget.seconds(cfg.time_limit_s)
    rec = _Recorder(cfg, budget)
    pcfg = cfg.planner_config()
    if cfg.planner.startswith("ao-"):
        res = ao_plan(P, cfg.kind, pcfg, budget, rng, rec.on_event, rec.on_iteration)
    else:
        res = m_x_plan(P, cfg.kind, pcfg, budget, cfg.planner.endswith("-prune"), rng,
                       cfg.call_iterations, rec.on_event, rec.on_iteration)
    rec._push(time.monotonic() - rec.t0)
    record = TrialRecord(cfg.problem, cfg.planner, seed, rec.samples, res.iterations_run)
    record.check()
    return record


def _run_trial_args(args):
    return run_trial(*args)


def run_benchmark(cfg: RunConfig) -> list:
    """``cfg.runs`` trials with seeds ``base_seed .. base_seed + runs - 1``."""
    cfg.validate()
    make_problem(cfg.problem, cfg.fixtures_dir)     # fail on a missing fixture before any trial
    seeds = [cfg.base_seed + k for k in range(cfg.runs)]
    if cfg.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_run_trial_args, [(cfg, s) for s in seeds]))
    out = []
    for s in seeds:
        r = run_trial(cfg, s)
        log.info("%s %s seed %d: final %.6g after %d iterations",
                 cfg.problem, cfg.planner, s, r.final_cost, r.iterations)
        out.append(r)
    return out


# -- CSV / JSON ----------------------------------------------------------------------

def emit_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        r.check()
        for s in r.samples:
            w.writerow([r.problem, r.planner, r.seed, repr(float(s.wall_s)),
                        repr(float(s.best_cost)), s.tree_size, s.meta_iter])
    return buf.getvalue()


def parse_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("missing or unexpected CSV header")
    records: dict = {}
    for row in rows[1:]:
        problem, planner, seed, wall, cost, size, it = row
        key = (problem, planner, int(seed))
        if key not in records:
            records[key] = TrialRecord(problem, planner, int(seed))
        records[key].samples.append(Sample(float(wall), float(cost), int(size), int(it)))
    return list(records.values())


def write_csv(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(emit_csv(records))
    return path


# -- aggregation -----------------------------------------------------------------------

@dataclass
class Curve:
    t: np.ndarray
    mean_cost: np.ndarray
    included: np.ndarray
    excluded: np.ndarray


def time_grid(t_end: float, step: float = 0.1) -> np.ndarray:
    n = int(math.floor(t_end / step + 1e-9))
    return np.round(np.arange(n + 1) * step, 10)


def aggregate(records, step: float = 0.1, t_end: Optional[float] = None) -> Curve:
    """Mean step-hold best cost on a uniform grid.

    At each grid time a run contributes the last best cost recorded at or
    before it; runs with no solution yet are left out and counted.
    """
    if not records:
        raise ValueError("need at least one record")
    if t_end is None:
        t_end = max(r.samples[-1].wall_s for r in records if r.samples)
    ts = time_grid(t_end, step)
    total = np.zeros(len(ts))
    inc = np.zeros(len(ts), dtype=int)
    for r in records:
        walls = np.array([s.wall_s for s in r.samples])
        costs = np.array([s.best_cost for s in r.samples])
        idx = np.searchsorted(walls, ts, side="right") - 1
        held = np.where(idx >= 0, costs[np.maximum(idx, 0)], np.inf)
        ok = np.isfinite(held)
        total[ok] += held[ok]
        inc += ok
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(inc > 0, total / np.maximum(inc, 1), np.nan)
    return Curve(ts, mean, inc, len(records) - inc)


def emit_aggregate_csv(curve: Curve) -> str:
    lines = ["t,mean_cost,included,excluded"]
    for t, m, a, b in zip(curve.t, curve.mean_cost, curve.included, curve.excluded):
        lines.append(f"{float(t)!r},{float(m)!r},{int(a)},{int(b)}")
    return "\n".join(lines) + "\n"


def summarize(records, curve: Optional[Curve] = None) -> dict:
    finals = np.array([r.final_cost for r in records])
    solved = finals[np.isfinite(finals)]
    firsts = np.array([r.first_solution_s for r in records])
    firsts = firsts[np.isfinite(firsts)]
    curve = curve or aggregate(records)
    return {
        "problem": records[0].problem,
        "planner": records[0].planner,
        "runs": len(records),
        "mean_final_cost": float(solved.mean()) if len(solved) else None,
        "std_final_cost": float(solved.std(ddof=1)) if len(solved) > 1 else None,
        "mean_first_solution_s": float(firsts.mean()) if len(firsts) else None,
        "excluded_counts_per_gridpoint": [int(v) for v in curve.excluded],
        "mean_iterations": float(np.mean([r.iterations for r in records])),
    }


def write_outputs(records, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{records[0].problem}__{records[0].planner}"
    write_csv(records, out / f"{stem}.csv")
    curve = aggregate(records)
    (out / f"{stem}.aggregate.csv").write_text(emit_aggregate_csv(curve), encoding="utf-8")
    summary = summarize(records, curve)
    (out / f"{stem}.summary.json").write_text(json.dumps(summary, indent=2) + "\n",
                                              encoding="utf-8")
    return summary


# -- EST bound curves and cost-weight sweep ----------------------------------------------

def fig4_goal_volumes(n: int = 60, g_max: float = 0.99) -> np.ndarray:
    # the bound diverges to -inf as g -> 1 (ln ln 1/g), so the grid stops short of 1
    return np.logspace(-3.0, math.log10(g_max), n)


def emit_fig4_curves(path=None, gs=None) -> str:
    gs = fig4_goal_volumes() if gs is None else np.asarray(gs, dtype=float)
    lines = ["label,alpha,beta,g,gamma,delta,expected_samples,expected_seconds"]
    for ab, label in FIG4_PAIRS:
        for g in gs:
            gamma, delta, n = est_runtime_bound(float(g), ab, ab)
            lines.append(f"{label},{ab!r},{ab!r},{float(g)!r},{gamma!r},{delta!r},"
                         f"{n!r},{n / SAMPLES_PER_SECOND!r}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    return text


def sweep_table(results: dict) -> str:
    """Mean cost and mean time-to-reach per meta-iteration, for each cost weight.

    Only runs that reached a meta-iteration contribute to its row.
    """
    lines = ["cost_weight,meta_iter,mean_cost,mean_wall_s,runs"]
    for wc, records in results.items():
        depth = max((len(r.costs) for r in records), default=0)
        for i in range(depth):
            costs, walls = [], []
            for r in records:
                events = [s for s in r.samples if s.meta_iter == i + 1]
                if events:
                    costs.append(events[0].best_cost)
                    walls.append(events[0].wall_s)
            lines.append(f"{wc!r},{i + 1},{float(np.mean(costs))!r},"
                         f"{float(np.mean(walls))!r},{len(costs)}")
    return "\n".join(lines) + "\n"


def run_sweep(cfg: RunConfig, weights=COST_WEIGHTS) -> dict:
    return {wc: run_benchmark(replace(cfg, cost_weight=wc)) for wc in weights}


# -- CLI ----------------------------------------------------------------------------------

_FLAG_FIELDS = {
    "problem": "problem", "planner": "planner", "time_limit": "time_limit_s",
    "runs": "runs", "seed": "base_seed", "cost_weight": "cost_weight",
    "goal_bias": "goal_bias", "out_dir": "out_dir", "fixtures_dir": "fixtures_dir",
    "jobs": "jobs", "max_iterations": "max_iterations", "sample_every": "sample_every",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aoplan", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("bench", "run seeded trials of one planner on one problem"),
                        ("sweep", "AO-RRT over the cost-weight grid"),
                        ("fig4", "write the EST expected-runtime bound curves")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("--out-dir")
        if name == "fig4":
            continue
        # defaults are None so that only flags given explicitly override the file
        p.add_argument("--problem", choices=PROBLEMS)
        p.add_argument("--planner", choices=PLANNERS)
        p.add_argument("--time-limit", type=float)
        p.add_argument("--runs", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--cost-weight", type=float)
        p.add_argument("--goal-bias", type=float)
        p.add_argument("--fixtures-dir")
        p.add_argument("--jobs", type=int)
        p.add_argument("--max-iterations", type=int)
        p.add_argument("--sample-every", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args, cfg: Optional[RunConfig] = None) -> RunConfig:
    """Defaults, then the config file, then explicitly given flags."""
    cfg = cfg or RunConfig()
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **data)
    overrides = {attr: getattr(args, flag) for flag, attr in _FLAG_FIELDS.items()
                 if getattr(args, flag, None) is not None}
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        defaults = RunConfig(problem="pendulum", planner="ao-rrt") \
            if args.command == "sweep" else RunConfig()
        cfg = resolve_config(args, defaults)
        out_dir = Path(cfg.out_dir or "results")
        if args.command == "fig4":
            path = out_dir / "fig4_est_bound.csv"
            emit_fig4_curves(path)
            print(path)
            return EXIT_OK
        if args.command == "sweep":
            cfg.validate()
            results = run_sweep(cfg)
            for wc, records in results.items():
                write_outputs(records, out_dir / f"wc_{wc:g}")
            path = out_dir / f"{cfg.problem}__sweep.csv"
            path.write_text(sweep_table(results), encoding="utf-8")
            print(path)
            return EXIT_OK
        records = run_benchmark(cfg)
        summary = write_outputs(records, out_dir)
        print(json.dumps({k: v for k, v in summary.items()
                          if k != "excluded_counts_per_gridpoint"}))
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"fixture missing: {e}", file=sys.stderr)
        return EXIT_FIXTURE


if __name__ == "__main__":
    sys.exit(main())
