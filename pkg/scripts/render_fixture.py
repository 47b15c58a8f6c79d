"""Draw a rectangle-world fixture (obstacles, start, goal) to a PNG.

    python scripts/render_fixture.py kink bugtrap flappy --out figures
"""
import argparse
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Circle, Rectangle

from aoplan.geometry import load_world


def render(name, out_dir, fixtures_dir=None):
    w = load_world(name, fixtures_dir)
    x0, x1, y0, y1 = w.domain
    fig, ax = plt.subplots(figsize=(5, 5 * (y1 - y0) / (x1 - x0)))
    for x, y, dx, dy in w.obstacles:
        ax.add_patch(Rectangle((x, y), dx, dy, color="0.3"))
    if w.goal[0] == "circle":
        _, cx, cy, r = w.goal
        ax.add_patch(Circle((cx, cy), r, color="tab:green", alpha=0.6))
    else:
        _, gx, gy, gw, gh = w.goal
        ax.add_patch(Rectangle((gx, gy), gw, gh, color="tab:green", alpha=0.6))
    ax.plot(*w.start[:2], "o", color="tab:red")
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_aspect("equal")
    title = name if w.optimum is None else f"{name}  (optimum {w.optimum:.4f})"
    ax.set_title(title)
    path = Path(out_dir) / f"{name}.png"
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", default=["kink", "bugtrap", "flappy"])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--fixtures-dir")
    args = ap.parse_args()
    for name in args.names:
        print(render(name, args.out, args.fixtures_dir))


if __name__ == "__main__":
    main()
