"""Command-line front end: ``solve``, ``bench`` and ``export-plot``.

Exit codes: 0 success, 1 usage error (bad flags, unreadable problem or paving
file), 2 solver fault (timeout, crashed worker, protocol error).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from typing import IO, Sequence

from .model import NCSP, ProblemError, builtin, parse, BUILTINS
from .parallel import DeterministicScheduler, ParallelConfig, run_parallel
from .parallel.runtime import WorkerCrashed
from .parallel.worker import ProtocolError
from .search import RunStats, SolveTimeout, read_paving, solve_sequential, write_paving

__all__ = ["main", "BenchRecord", "read_stats", "write_stats", "export_rectangles"]

EXIT_OK, EXIT_USAGE, EXIT_FAULT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


# -- stats files ------------------------------------------------------------


def write_stats(fh: IO[str], total: RunStats, workers: Sequence[RunStats]) -> None:
    json.dump(
        {"total": asdict(total), "workers": [asdict(s) for s in workers]},
        fh,
        indent=2,
        sort_keys=True,
    )
    fh.write("\n")


def read_stats(fh: IO[str]) -> tuple[RunStats, list[RunStats]]:
    d = json.load(fh)
    return RunStats.from_dict(d["total"]), [RunStats.from_dict(w) for w in d["workers"]]


# -- solve ------------------------------------------------------------------


def _load_problem(args) -> tuple[str, NCSP]:
    if args.problem is not None:
        try:
            return args.problem, builtin(args.problem)
        except ProblemError as exc:
            raise UsageError(str(exc)) from None
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read problem file: {exc}") from None
    try:
        return os.path.basename(args.file), parse(text)
    except ProblemError as exc:
        raise UsageError(f"{args.file}: {exc}") from None


def _config(args, workers: int | None = None, **over) -> ParallelConfig:
    kw = dict(
        workers=args.workers if workers is None else workers,
        nbb=args.nbb,
        delta=args.delta,
        ns=args.ns if isinstance(args.ns, int) else args.ns[0],
        neighbors=args.neighbors if isinstance(args.neighbors, int) else args.neighbors[0],
        preprocess=not getattr(args, "no_preprocess", False),
    )
    kw.update(over)
    try:
        return ParallelConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_solve(args) -> int:
    name, problem = _load_problem(args)
    cfg = _config(args)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as tr:
            sched = DeterministicScheduler(problem, args.eps, cfg, seed=args.seed, trace=tr)
            t0 = time.perf_counter()
            res = sched.run()
            res.wall_time = time.perf_counter() - t0
        paving, per_worker, wall = res.paving, res.stats, res.wall_time
    elif cfg.workers == 1:
        paving, st = solve_sequential(problem, args.eps, args.time_budget)
        per_worker, wall = [st], st.wall_time
    else:
        res = run_parallel(problem, args.eps, cfg, args.time_budget)
        paving, per_worker, wall = res.paving, res.stats, res.wall_time
    total = RunStats()
    for s in per_worker:
        total = total.merged(s)
    total.wall_time = wall
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_paving(paving, fh)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            write_stats(fh, total, per_worker)
    br = max(s.branches for s in per_worker)
    print(
        f"{name} eps={args.eps:g} workers={cfg.workers} boxes={len(paving)} "
        f"inner={total.inner} branches={total.branches} max_branches={br} time={wall:.3f}s"
    )
    return EXIT_OK


# -- bench ------------------------------------------------------------------


@dataclass
class BenchRecord:
    problem: str
    eps: float
    preprocess: str  # "on", "off" or "" for the baseline
    neighbors: int | str
    ns: int | str
    workers: int
    t: float | str
    br_max: int | str
    c: int | str
    speedup: float | str
    br_ratio: float | str
    status: str  # ok, timeout, baseline, baseline-cached

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _baseline_key(problem: str, eps: float) -> str:
    return f"{problem}|{eps!r}"


def _load_cache(path: str | None) -> dict:
    if not path or not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def bench_records(args, problems: list[tuple[str, NCSP]]) -> list[BenchRecord]:
    cache = _load_cache(args.baseline)
    records: list[BenchRecord] = []
    pps = {"on": [True], "off": [False], "both": [True, False]}[args.preprocess]
    for (name, problem), eps in itertools.product(problems, args.eps):
        key = _baseline_key(name, eps)
        if key in cache:
            t1, br1 = cache[key]["t"], cache[key]["branches"]
            flag = "baseline-cached"
        else:
            try:
                _, st = solve_sequential(problem, eps, args.time_budget)
            except SolveTimeout:
                records.append(BenchRecord(name, eps, "", "", "", 1, "", "", "", "", "", "timeout"))
                continue
            t1, br1 = st.wall_time, st.branches
            cache[key] = {"t": t1, "branches": br1}
            flag = "baseline"
        records.append(BenchRecord(name, eps, "", "", "", 1, t1, br1, 0, 1.0, 1.0, flag))
        for pp, nb, ns, w in itertools.product(pps, args.neighbors, args.ns, args.workers):
            cfg = _config(args, workers=w, preprocess=pp, neighbors=nb, ns=ns)
            row = dict(problem=name, eps=eps, preprocess="on" if pp else "off", neighbors=nb, ns=ns, workers=w)
            try:
                res = run_parallel(problem, eps, cfg, args.time_budget)
            except SolveTimeout:
                records.append(BenchRecord(**row, t="", br_max="", c="", speedup="", br_ratio="", status="timeout"))
                continue
            br = res.max_branches
            records.append(
                BenchRecord(
                    **row,
                    t=res.wall_time,
                    br_max=br,
                    c=res.total.balance_boxes,
                    speedup=t1 / res.wall_time if res.wall_time > 0 else float("inf"),
                    br_ratio=br1 / br if br else float("inf"),
                    status="ok",
                )
            )
            if args.verbose:
                r = records[-1]
                print(f"  {name} eps={eps:g} pp={row['preprocess']} N={nb} ns={ns} p={w} "
                      f"t={r.t:.2f}s speedup={r.speedup:.2f} ratio={r.br_ratio:.2f}", file=sys.stderr)
    if args.baseline:
        with open(args.baseline, "w", encoding="utf-8") as fh:
            json.dump(cache, fh, indent=2, sort_keys=True)
    return records


def cmd_bench(args) -> int:
    if args.problem:
        problems = []
        for n in args.problem:
            try:
                problems.append((n, builtin(n)))
            except ProblemError as exc:
                raise UsageError(str(exc)) from None
    else:
        problems = []
        for path in args.file:
            ns = argparse.Namespace(problem=None, file=path)
            problems.append(_load_problem(ns))
    records = bench_records(args, problems)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        wr = csv.DictWriter(out, fieldnames=BenchRecord.columns())
        wr.writeheader()
        for r in records:
            wr.writerow(asdict(r))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# -- export-plot ------------------------------------------------------------


def export_rectangles(paving, dims: tuple[int, int], fh: IO[str]) -> int:
    """Write the 2-D projection of every paving box as a CSV rectangle."""
    i, j = dims
    for e in paving:
        n = e.box.n
        if not (0 <= i < n and 0 <= j < n):
            raise UsageError(f"dimension out of range for {n}-dimensional boxes: {dims}")
    wr = csv.writer(fh)
    wr.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "status"])
    for e in paving:
        a, b = e.box[i], e.box[j]
        wr.writerow([repr(a.lo), repr(a.hi), repr(b.lo), repr(b.hi), e.status.value])
    return len(paving)


def cmd_export_plot(args) -> int:
    try:
        with open(args.paving, encoding="utf-8") as fh:
            paving = read_paving(fh)
    except OSError as exc:
        raise UsageError(f"cannot read paving file: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dims = tuple(args.dims)
    if any(d < 0 for d in dims):
        raise UsageError(f"dimensions must be non-negative: {dims}")
    n = paving[0].box.n if paving else None
    if n is not None and max(dims) >= n:
        raise UsageError(f"dimension out of range for {n}-dimensional boxes: {dims}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            export_rectangles(paving, dims, fh)
    else:
        export_rectangles(paving, dims, sys.stdout)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def _add_balancing_flags(sp, multi: bool) -> None:
    sp.add_argument("--nbb", type=int, default=32, help="queue size that triggers a preprocess split")
    sp.add_argument("--delta", type=int, default=10, help="load margin kept locally")
    if multi:
        sp.add_argument("--ns", type=_positive_int, nargs="+", default=[100])
        sp.add_argument("--neighbors", type=int, nargs="+", choices=(2, 4), default=[2])
    else:
        sp.add_argument("--ns", type=_positive_int, default=100, help="steps between balancing rounds")
        sp.add_argument("--neighbors", type=int, choices=(2, 4), default=2)
    sp.add_argument("--time-budget", type=_positive_float, default=None, metavar="SECONDS")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="parbnp", description="Parallel branch-and-prune solver for numerical CSPs.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="solve one problem")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", help=f"builtin problem ({', '.join(sorted(BUILTINS))})")
    src.add_argument("--file", help="problem file")
    sp.add_argument("--eps", type=_positive_float, required=True)
    sp.add_argument("--workers", type=_positive_int, default=1)
    _add_balancing_flags(sp, multi=False)
    sp.add_argument("--no-preprocess", action="store_true")
    sp.add_argument("--out", help="paving output (JSON lines)")
    sp.add_argument("--stats", help="statistics output (JSON)")
    sp.add_argument("--trace", help="run on the deterministic scheduler and log every delivered message here")
    sp.add_argument("--seed", type=int, default=0, help="scheduler seed for --trace")
    sp.set_defaults(func=cmd_solve)

    bp = sub.add_parser("bench", help="run a parameter grid and emit CSV")
    src = bp.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", nargs="+")
    src.add_argument("--file", nargs="+")
    bp.add_argument("--eps", type=_positive_float, nargs="+", required=True)
    bp.add_argument("--workers", type=_positive_int, nargs="+", default=[8])
    _add_balancing_flags(bp, multi=True)
    bp.add_argument("--preprocess", choices=("on", "off", "both"), default="both")
    bp.add_argument("--baseline", help="JSON cache of sequential baselines (read and updated)")
    bp.add_argument("--out", help="CSV output (default stdout)")
    bp.add_argument("-v", "--verbose", action="store_true")
    bp.set_defaults(func=cmd_bench)

    ep = sub.add_parser("export-plot", help="project a paving onto two dimensions as CSV rectangles")
    ep.add_argument("paving")
    ep.add_argument("--dims", type=int, nargs=2, default=[0, 1], metavar=("I", "J"))
    ep.add_argument("--out")
    ep.set_defaults(func=cmd_export_plot)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"parbnp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolveTimeout, WorkerCrashed, ProtocolError, RuntimeError) as exc:
        print(f"parbnp: solve failed: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
