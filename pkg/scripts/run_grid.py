"""Grid-oracle soundness check of the HC4 contractor on the 2-D test problems.

    python3 scripts/run_grid.py [--k 64] [--per-cell 3]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from parbnp.contractor import hc4_revise, propagate  # noqa: E402
from tests.oracles import GRID_PROBLEMS, grid_oracle_violations  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--per-cell", type=int, default=3)
    ap.add_argument("--single", action="store_true", help="one hc4_revise pass per constraint instead of propagate")
    args = ap.parse_args()

    if args.single:
        def contract(p, b):
            for c in p.constraints:
                b = hc4_revise(c, b)
                if b is None:
                    return None
            return b
    else:
        contract = propagate

    total_bad = 0
    print(f"{'problem':<12} {'points':>8} {'violations':>10} {'time':>7}")
    for name in GRID_PROBLEMS:
        t0 = time.perf_counter()
        checked, bad = grid_oracle_violations(name, contract, k=args.k, per_cell=args.per_cell)
        total_bad += bad
        print(f"{name:<12} {checked:>8} {bad:>10} {time.perf_counter() - t0:>6.1f}s")
    return 1 if total_bad else 0


if __name__ == "__main__":
    sys.exit(main())
