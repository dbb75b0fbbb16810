"""Solve a problem and draw a 2-D projection of its paving.

    python3 scripts/plot_pavings.py --problem sphere-plane --eps 0.05 --dims 2 3 --out sp.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import PatchCollection  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from parbnp.model import builtin  # noqa: E402
from parbnp.search import solve_sequential  # noqa: E402

COLORS = {"inner": "tab:green", "precise": "tab:orange"}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--problem", default="sphere-plane")
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--dims", type=int, nargs=2, default=[0, 1])
    ap.add_argument("--out", default="paving.png")
    args = ap.parse_args()

    p = builtin(args.problem)
    paving, stats = solve_sequential(p, args.eps)
    i, j = args.dims
    fig, ax = plt.subplots(figsize=(6, 6))
    for status, color in COLORS.items():
        rects = [
            Rectangle((e.box[i].lo, e.box[j].lo), e.box[i].hi - e.box[i].lo, e.box[j].hi - e.box[j].lo)
            for e in paving
            if e.status.value == status
        ]
        ax.add_collection(PatchCollection(rects, facecolor=color, edgecolor="k", linewidth=0.1, alpha=0.6))
    ax.set_xlim(p.initial[i].lo, p.initial[i].hi)
    ax.set_ylim(p.initial[j].lo, p.initial[j].hi)
    ax.set_xlabel(p.names[i])
    ax.set_ylabel(p.names[j])
    ax.set_title(f"{args.problem}, eps={args.eps:g}: {len(paving)} boxes, {stats.branches} branches")
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
