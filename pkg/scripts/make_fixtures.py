"""Write the rectangle-world fixtures and their oracle optima.

Layouts are hand-drawn rectangle worlds; optima come from the oracles.

    python scripts/make_fixtures.py [--out DIR] [--skip-grid]
"""
import argparse
import time

from aoplan.geometry import FIXTURE_DIR, RectWorld, save_world
from aoplan.oracles import grid_optimum, visibility_optimum


def kink():
    # Block x in [0.3, 0.7], y in [0, 0.7] pierced by a Z-shaped corridor of
    # width 0.02: right along y=0.20, up along x=0.50, right along y=0.30.
    # The open band above the block is the easy, longer homotopy class.
    rects = [
        (0.30, 0.00, 0.21, 0.19),
        (0.51, 0.00, 0.19, 0.29),
        (0.30, 0.21, 0.19, 0.49),
        (0.49, 0.31, 0.21, 0.39),
    ]
    return RectWorld("kink", (0, 1, 0, 1), (0.06, 0.25), ("circle", 0.94, 0.25, 0.03), rects,
                     notes=["corridor width 0.02 with two 90 degree kinks; open band above the block"])


def bugtrap():
    # C-shaped trap around the start, mouth (width 0.05) facing away from the goal.
    t = 0.03
    rects = [
        (0.25, 0.70 - t, 0.35, t),           # top wall
        (0.25, 0.30, 0.35, t),               # bottom wall
        (0.60 - t, 0.30, t, 0.40),           # back wall, facing the goal
        (0.25, 0.525, t, 0.70 - 0.525),      # upper lip
        (0.25, 0.30, t, 0.475 - 0.30),       # lower lip
    ]
    return RectWorld("bugtrap", (0, 1, 0, 1), (0.45, 0.5), ("circle", 0.85, 0.5, 0.03), rects,
                     notes=["mouth spans y in [0.475, 0.525] on the left wall"])


def flappy():
    # Three walls, each with a lower opening y in [120, 220] and an upper
    # opening y in [380, 480]; goal on the right at low altitude.
    rects = []
    for x in (250.0, 500.0, 750.0):
        rects += [(x, 0.0, 30.0, 120.0), (x, 220.0, 30.0, 160.0), (x, 480.0, 30.0, 120.0)]
    return RectWorld("flappy", (0, 1000, 0, 600), (20.0, 170.0), ("rect", 960.0, 120.0, 40.0, 100.0),
                     rects, notes=["start vertical velocity 0; walls 30 px thick"])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(FIXTURE_DIR))
    ap.add_argument("--skip-grid", action="store_true")
    args = ap.parse_args()
    for w in (kink(), bugtrap()):
        w.optimum = visibility_optimum(w)
        if not args.skip_grid:
            t = time.perf_counter()
            w.grid_optimum = grid_optimum(w, 1000)
            print(f"{w.name}: grid Dijkstra {time.perf_counter() - t:.1f}s")
        print(f"{w.name}: optimum {w.optimum:.6f} grid {w.grid_optimum}")
        save_world(w, args.out)
    save_world(flappy(), args.out)


if __name__ == "__main__":
    main()
