"""Real multi-process execution of the worker protocol.

Each worker is an OS process with one inbox queue.  Messages cross process
boundaries as wire-format bytes.  Once Terminate has reached every worker,
each one ships its paving and counters back to the parent, which merges them.
"""

from __future__ import annotations

import multiprocessing as mp
import queue
import time
import traceback
from collections import Counter

from ..model import NCSP
from ..search import SolveTimeout
from .messages import decode, encode
from .scheduler import ParallelResult
from .worker import ParallelConfig, WorkerRuntime

__all__ = ["run_parallel", "WorkerCrashed"]

_POLL = 0.05


class WorkerCrashed(RuntimeError):
    """A worker raised or died before reporting its results."""


def _drive(w: WorkerRuntime, inbox, inboxes) -> None:
    while not w.terminated:
        while True:
            try:
                data = inbox.get_nowait()
            except queue.Empty:
                break
            w.receive(decode(data))
        if w.terminated:
            break
        if w.ready():
            for dst, m in w.work():
                inboxes[dst].put(encode(m))
        else:
            try:
                data = inbox.get(timeout=_POLL)
            except queue.Empty:
                continue
            w.receive(decode(data))


def _worker_main(wid, problem, eps, cfg, inboxes, results) -> None:
    try:
        w = WorkerRuntime(wid, problem, eps, cfg)
        t0 = time.perf_counter()
        _drive(w, inboxes[wid], inboxes)
        w.stats.wall_time = time.perf_counter() - t0
        results.put(
            ("ok", wid, w.paving, w.stats, dict(w.edge_sent), dict(w.edge_recv), w.rounds)
        )
    except BaseException:
        results.put(("error", wid, traceback.format_exc()))


def _run_inline(problem: NCSP, eps: float, cfg: ParallelConfig, deadline) -> ParallelResult:
    w = WorkerRuntime(0, problem, eps, cfg)
    t0 = time.perf_counter()
    n = 0
    while not w.terminated:
        w.work()
        n += 1
        if deadline is not None and n % 64 == 0 and time.perf_counter() > deadline:
            raise SolveTimeout("parallel solve exceeded its time budget")
    w.stats.wall_time = time.perf_counter() - t0
    return ParallelResult(list(w.paving), [w.stats], w.stats.wall_time, {}, {}, 0, w.rounds)


def run_parallel(
    problem: NCSP,
    eps: float,
    cfg: ParallelConfig,
    time_budget: float | None = None,
) -> ParallelResult:
    """Solve with ``cfg.workers`` processes and merge the per-worker pavings."""
    if not eps > 0:
        raise ValueError(f"precision must be positive, got {eps}")
    t0 = time.perf_counter()
    deadline = None if time_budget is None else t0 + time_budget
    p = cfg.workers
    if p == 1:
        return _run_inline(problem, eps, cfg, deadline)

    ctx = mp.get_context("fork")
    inboxes = [ctx.Queue() for _ in range(p)]
    results = ctx.Queue()
    procs = [
        ctx.Process(
            target=_worker_main,
            args=(i, problem, eps, cfg, inboxes, results),
            name=f"parbnp-worker-{i}",
            daemon=True,
        )
        for i in range(p)
    ]
    t0 = time.perf_counter()
    for proc in procs:
        proc.start()

    got: dict[int, tuple] = {}
    try:
        while len(got) < p:
            if deadline is not None and time.perf_counter() > deadline:
                raise SolveTimeout(f"parallel solve exceeded {time_budget} s")
            try:
                rec = results.get(timeout=_POLL)
            except queue.Empty:
                dead = [
                    i for i, proc in enumerate(procs)
                    if i not in got and proc.exitcode is not None
                ]
                if dead:
                    # the result may still be in the pipe; look once more
                    try:
                        rec = results.get(timeout=1.0)
                    except queue.Empty:
                        codes = {i: procs[i].exitcode for i in dead}
                        raise WorkerCrashed(f"workers exited without results: {codes}") from None
                else:
                    continue
            if rec[0] == "error":
                raise WorkerCrashed(f"worker {rec[1]} failed:\n{rec[2]}")
            got[rec[1]] = rec
        wall = time.perf_counter() - t0
    finally:
        if len(got) < p:
            for proc in procs:
                if proc.is_alive():
                    proc.terminate()
        for q in inboxes:
            _drain(q)
        for proc in procs:
            proc.join(timeout=5.0)
            if proc.is_alive():
                proc.kill()
                proc.join()
        for q in inboxes + [results]:
            q.close()
            q.cancel_join_thread()

    paving = []
    stats = []
    edge_sent: Counter = Counter()
    edge_recv: Counter = Counter()
    for i in range(p):
        _, wid, pav, st, sent, recv, rounds = got[i]
        paving.extend(pav)
        stats.append(st)
        for j, n in sent.items():
            edge_sent[(wid, j)] += n
        for j, n in recv.items():
            edge_recv[(j, wid)] += n
    return ParallelResult(
        paving, stats, wall, dict(edge_sent), dict(edge_recv), 0, got[0][6]
    )


def _drain(q) -> None:
    try:
        while True:
            q.get_nowait()
    except (queue.Empty, OSError, ValueError):
        pass
