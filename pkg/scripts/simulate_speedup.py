"""Modelled speedup from the lockstep scheduler.

Every worker performs one unit of work per tick and messages sent during a tick
arrive at the start of the next, so the tick count is a machine-independent
stand-in for parallel wall time.  Useful on hosts with fewer cores than workers.

    python3 scripts/simulate_speedup.py --problem 3rpr-analog --eps 0.1 --workers 2 4 8 16
"""

import argparse
import sys

from parbnp.model import builtin
from parbnp.parallel import DeterministicScheduler, ParallelConfig
from parbnp.search import paving_key, solve_sequential


class TickCounter(DeterministicScheduler):
    ticks = 0

    def _lockstep_tick(self):
        self.ticks += 1
        super()._lockstep_tick()


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--problem", default="sphere-plane")
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--workers", type=int, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--ns", type=int, default=100)
    ap.add_argument("--neighbors", type=int, default=2, choices=(2, 4))
    ap.add_argument("--no-preprocess", action="store_true")
    ap.add_argument("--target", default="neighborhood", choices=("neighborhood", "neighbors"))
    args = ap.parse_args()

    p = builtin(args.problem)
    paving, seq = solve_sequential(p, args.eps)
    ref = paving_key(paving)
    t1 = seq.prunes  # one pop per tick when alone
    print(f"{args.problem} eps={args.eps:g}: Br1={seq.branches} sequential ticks={t1}")
    print(f"{'p':>4} {'ticks':>8} {'speedup':>8} {'Br1/maxBr':>10} {'moved':>8} {'same':>5}")
    for w in args.workers:
        cfg = ParallelConfig(
            workers=w, ns=args.ns, neighbors=args.neighbors,
            preprocess=not args.no_preprocess, balance_target=args.target,
        )
        sched = TickCounter(p, args.eps, cfg, policy="lockstep")
        res = sched.run()
        same = paving_key(res.paving) == ref and res.ledger_balanced()
        print(
            f"{w:>4} {sched.ticks:>8} {t1 / sched.ticks:>8.2f} "
            f"{seq.branches / max(res.max_branches, 1):>10.2f} {res.total.balance_boxes:>8} {str(same):>5}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
