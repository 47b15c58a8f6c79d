"""Cost-vs-time comparison of all six planners on one problem.

Writes the per-trial CSV, aggregate CSV and summary JSON for each planner
under OUT/<problem>/, then prints the mean final cost of each.

    python scripts/run_comparison.py kink --time-limit 60 --runs 10 --out results
"""
import argparse
from pathlib import Path

from aoplan.harness import PLANNERS, RunConfig, run_benchmark, write_outputs
from aoplan.problems import PROBLEMS


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("problem", choices=PROBLEMS)
    ap.add_argument("--planners", nargs="+", default=list(PLANNERS), choices=PLANNERS)
    ap.add_argument("--time-limit", type=float, default=60.0)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out) / args.problem
    for planner in args.planners:
        cfg = RunConfig(problem=args.problem, planner=planner, time_limit_s=args.time_limit,
                        runs=args.runs, base_seed=args.seed, jobs=args.jobs)
        summary = write_outputs(run_benchmark(cfg), out)
        print(f"{planner:12s} mean final {summary['mean_final_cost']}  "
              f"first solution {summary['mean_first_solution_s']} s")


if __name__ == "__main__":
    main()
