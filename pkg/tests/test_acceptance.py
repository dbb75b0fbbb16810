"""End-to-end acceptance checks.  Each test reports one PASS/FAIL line."""

import itertools
import os
import random
import time

import mpmath
import numpy as np
import pytest

from parbnp.contractor import propagate
from parbnp.interval import Box, Interval, arith, pow_int, unary
from parbnp.model import BUILTINS, builtin, eval_expr, parse
from parbnp.parallel import BoxBatch, DeterministicScheduler, ParallelConfig, Token, run_parallel
from parbnp.search import paving_key, solve_sequential, write_paving

from .oracles import (
    EXACT_BINARY,
    EXACT_UNARY,
    GRID_PROBLEMS,
    exact_eval,
    grid_oracle_violations,
    inside,
    sample,
    sphere_plane_point,
)

pytestmark = pytest.mark.slow


def _random_interval(rng, scale):
    a, b = rng.uniform(-scale, scale), rng.uniform(-scale, scale)
    if rng.random() < 0.1:
        b = a
    return Interval(min(a, b), max(a, b))


def test_interval_soundness(criterion):
    rng = random.Random(1)
    t0 = time.perf_counter()
    checks = violations = 0
    with mpmath.workprec(200):
        for _ in range(10_000):
            a, b = _random_interval(rng, 1e3), _random_interval(rng, 1e3)
            for op in ("add", "sub", "mul", "div"):
                r = arith(op, a, b)
                x, y = sample(a, rng), sample(b, rng)
                if op == "div" and y == 0:
                    y = b.hi if b.hi != 0 else b.lo
                    if y == 0:
                        continue
                checks += 1
                violations += not inside(r, EXACT_BINARY[op](x, y))
        for _ in range(5_000):
            a = _random_interval(rng, 20)
            for op in ("neg", "sqr", "sqrt", "exp", "log", "sin", "cos"):
                r = unary(op, a)
                x = sample(a, rng)
                if op == "sqrt" and x < 0 or op == "log" and x <= 0:
                    x = abs(x) or 1.0
                    if not a.lo <= x <= a.hi:
                        continue
                checks += 1
                violations += not inside(r, EXACT_UNARY[op](x))
            k = rng.randint(-3, 6)
            x = sample(a, rng)
            if not (k < 0 and x == 0):
                checks += 1
                violations += not inside(pow_int(a, k), mpmath.mpf(x) ** k)
        exprs = [c.expr for name in BUILTINS for c in builtin(name).constraints]
        exprs += [c.expr for src, _ in GRID_PROBLEMS.values() for c in parse(src).constraints]
        while checks < 100_000:
            e = rng.choice(exprs)
            b = Box(tuple(_random_interval(rng, 3) for _ in range(6)))
            r = eval_expr(e, b)
            x = [sample(c, rng) for c in b.components]
            v = exact_eval(e, x)
            if v is None:
                continue
            checks += 1
            violations += not inside(r, v)
    dt = time.perf_counter() - t0
    criterion(1, checks >= 100_000 and violations == 0 and dt < 30,
              f"{checks} containment checks, {violations} violations, {dt:.1f}s (limit 30s)")


def test_contractor_grid_oracle(criterion):
    results = {name: grid_oracle_violations(name, propagate, k=64, per_cell=3) for name in GRID_PROBLEMS}
    checked = sum(c for c, _ in results.values())
    bad = sum(v for _, v in results.values())
    ok = len(results) >= 5 and bad == 0 and all(c > 0 for c, _ in results.values())
    criterion(2, ok, f"{len(results)} problems, 64x64 grid, {checked} solution points, {bad} violations")


def _covered_count(paving, points):
    lo = np.array([[c.lo for c in e.box.components] for e in paving])
    hi = np.array([[c.hi for c in e.box.components] for e in paving])
    covered = 0
    for x in points:
        xf = np.array([float(v) for v in x])
        cand = np.nonzero(np.all((lo <= np.nextafter(xf, np.inf)) & (hi >= np.nextafter(xf, -np.inf)), axis=1))[0]
        covered += any(
            all(mpmath.mpf(lo[i, k]) <= x[k] <= mpmath.mpf(hi[i, k]) for k in range(len(x))) for i in cand
        )
    return covered


def test_paving_encloses_manifold(criterion):
    t0 = time.perf_counter()
    paving, _ = solve_sequential(builtin("sphere-plane"), 0.05)
    rng = random.Random(2024)
    with mpmath.workprec(200):
        points = [sphere_plane_point(rng) for _ in range(1000)]
        covered = _covered_count(paving, points)
    dt = time.perf_counter() - t0
    criterion(3, covered == 1000 and dt < 60,
              f"{covered}/1000 manifold points inside {len(paving)} boxes, {dt:.1f}s (limit 60s)")


def test_sequential_determinism(criterion, tmp_path):
    same = []
    for name in sorted(BUILTINS):
        blobs = []
        for run in range(2):
            paving, _ = solve_sequential(builtin(name), 0.05)
            path = tmp_path / f"{name}-{run}.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                write_paving(paving, fh)
            blobs.append(path.read_bytes())
        same.append((name, blobs[0] == blobs[1], len(blobs[0])))
    ok = all(s for _, s, _ in same)
    criterion(4, ok, ", ".join(f"{n}: {'identical' if s else 'DIFFERENT'} ({size} bytes)" for n, s, size in same))


MATRIX_EPS = 0.1


def test_parallel_equivalence_matrix(criterion):
    t0 = time.perf_counter()
    failures = []
    runs = 0
    for name in sorted(BUILTINS):
        p = builtin(name)
        ref = paving_key(solve_sequential(p, MATRIX_EPS)[0])
        for workers, ns, nb, pp in itertools.product((2, 4, 8), (10, 100), (2, 4), (True, False)):
            cfg = ParallelConfig(workers=workers, ns=ns, neighbors=nb, preprocess=pp)
            res = run_parallel(p, MATRIX_EPS, cfg)
            runs += 1
            if paving_key(res.paving) != ref or not res.ledger_balanced():
                failures.append((name, workers, ns, nb, pp))
    dt = time.perf_counter() - t0
    criterion(5, not failures and dt < 600,
              f"{runs} runs at eps={MATRIX_EPS}, {len(failures)} mismatches {failures[:3]}, {dt:.0f}s (limit 600s)")


class RaceScheduler(DeterministicScheduler):
    """Counts token deliveries that overtake a box batch still in flight."""

    races = 0

    def apply(self, act):
        if act[0] == "deliver":
            ch = self.channels[(act[1], act[2])]
            if ch and isinstance(ch[0], Token):
                if any(isinstance(m, BoxBatch) for c in self.channels.values() for m in c):
                    self.races += 1
        super().apply(act)


def test_termination_protocol(criterion):
    circle = parse("var x in [-2,2]; var y in [-2,2]; eq: x^2 + y^2 = 1;")
    cases = [
        (circle, 0.25, ParallelConfig(workers=w, ns=ns, delta=d, nbb=4, neighbors=nb, preprocess=pp))
        for w, ns, d, nb, pp in itertools.product((2, 3, 5), (1, 7), (0, 3), (2, 4), (True, False))
    ]
    sphere = builtin("sphere-plane")
    cases += [(sphere, 0.4, ParallelConfig(workers=w, ns=5, delta=2, nbb=8)) for w in (2, 4)]
    refs = {}
    runs = races = unsafe = stuck = wrong = 0
    for k, (p, eps, cfg) in enumerate(cases):
        if id(p) not in refs:
            refs[id(p)] = paving_key(solve_sequential(p, eps)[0])
        for seed in range(3):
            sched = RaceScheduler(p, eps, cfg, seed=1000 * k + seed, delay=(0.5, 0.9, 0.99)[seed])
            runs += 1
            try:
                res = sched.run()
            except AssertionError:
                unsafe += 1
                continue
            except RuntimeError:
                stuck += 1
                continue
            races += sched.races
            wrong += paving_key(res.paving) != refs[id(p)] or not res.ledger_balanced()
    ok = runs >= 100 and races > 0 and unsafe == stuck == wrong == 0
    criterion(6, ok, f"{runs} interleavings, {races} token-overtakes-batch races, "
                     f"{unsafe} early terminations, {stuck} non-terminating, {wrong} wrong pavings")


SPEEDUP_EPS = 0.05


@pytest.fixture(scope="module")
def speedup_run():
    p = builtin("3rpr-analog")
    _, seq = solve_sequential(p, SPEEDUP_EPS)
    res = run_parallel(p, SPEEDUP_EPS, ParallelConfig(workers=8, ns=100, neighbors=2, preprocess=True))
    return seq, res


def _cores():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()


def test_desk_scale_speedup(criterion, speedup_run):
    seq, res = speedup_run
    t1, t = seq.wall_time, res.wall_time
    speedup = t1 / t
    in_window = 30 <= t1 <= 120
    criterion(7, in_window and speedup >= 3.0,
              f"3rpr-analog eps={SPEEDUP_EPS}: t1={t1:.1f}s (window 30-120s), t8={t:.1f}s, "
              f"speedup={speedup:.2f} (floor 3.0), {_cores()} usable cores")


def test_balance_ratio(criterion, speedup_run):
    seq, res = speedup_run
    ratio = seq.branches / res.max_branches
    criterion(8, ratio >= 0.5 * 8,
              f"Br1={seq.branches}, max per-worker Br={res.max_branches}, ratio={ratio:.2f} (floor 4.0)")
