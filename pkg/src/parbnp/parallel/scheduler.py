"""Deterministic single-threaded execution of the worker protocol.

All workers live in one process; messages sit in per-(sender, receiver) FIFO
channels.  Each event either lets one worker act or delivers the head message
of one channel.  The choice comes from a script, a seeded RNG, or a lockstep
rule, so any interleaving can be reproduced exactly.  At the moment worker 0
broadcasts Terminate the scheduler checks the global safety condition.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from ..model import NCSP
from ..search import PavingEntry, RunStats
from .messages import BoxBatch, Message, Terminate, encode, decode, write_trace_line
from .worker import ParallelConfig, WorkerRuntime

__all__ = ["DeterministicScheduler", "SafetyViolation", "ParallelResult", "Action"]


class SafetyViolation(AssertionError):
    """Terminate was issued while work remained somewhere."""


@dataclass
class ParallelResult:
    paving: list[PavingEntry]
    stats: list[RunStats]
    wall_time: float = 0.0
    edge_sent: dict[tuple[int, int], int] = field(default_factory=dict)
    edge_recv: dict[tuple[int, int], int] = field(default_factory=dict)
    events: int = 0
    token_rounds: int = 0

    @property
    def total(self) -> RunStats:
        out = RunStats()
        for s in self.stats:
            out = out.merged(s)
        out.wall_time = self.wall_time
        return out

    @property
    def max_branches(self) -> int:
        return max((s.branches for s in self.stats), default=0)

    def ledger_balanced(self) -> bool:
        """Every box shipped on an edge arrived, and pops = 1 + 2 * branches."""
        if self.edge_sent != self.edge_recv:
            return False
        t = self.total
        pops = t.inner + t.precise + t.empty + t.branches
        return t.prunes == pops == 1 + 2 * t.branches


# An action is ("work", i) or ("deliver", src, dst).
Action = tuple


class DeterministicScheduler:
    """Run all workers in-process under a reproducible interleaving.

    ``policy``:
      * ``"random"`` (default): each event is drawn by a seeded RNG; with
        probability ``delay`` a ready worker acts even if messages are
        pending, which stretches the time boxes spend in flight.
      * ``"lockstep"``: every worker acts once per tick and messages sent
        during a tick are delivered at the start of the next one.  Per-worker
        step counts then model parallel time.
    ``script`` lists actions to replay first; the chosen policy continues
    afterwards.  Scripted actions that are not currently enabled are skipped.
    ``wire=True`` pushes every message through the binary encoder.
    """

    def __init__(
        self,
        problem: NCSP,
        eps: float,
        cfg: ParallelConfig,
        seed: int = 0,
        policy: str = "random",
        delay: float = 0.5,
        script: Sequence[Action] = (),
        trace: IO[str] | None = None,
        wire: bool = False,
        max_events: int = 50_000_000,
    ) -> None:
        if policy not in ("random", "lockstep"):
            raise ValueError(f"unknown policy {policy!r}")
        self.cfg = cfg
        self.workers = [WorkerRuntime(i, problem, eps, cfg) for i in range(cfg.workers)]
        self.channels: dict[tuple[int, int], deque] = {}
        self.rng = random.Random(seed)
        self.policy = policy
        self.delay = delay
        self.script = deque(script)
        self.trace = trace
        self.wire = wire
        self.max_events = max_events
        self.events = 0
        self.delivered = 0
        self.terminate_checked = False
        self.log: list[Action] = []

    # -- plumbing ----------------------------------------------------------

    def _post(self, src: int, out: Iterable[tuple[int, Message]]) -> None:
        for dst, m in out:
            if self.wire:
                m = decode(encode(m))
            if isinstance(m, Terminate) and not self.terminate_checked:
                self._check_safety()
            self.channels.setdefault((src, dst), deque()).append(m)

    def _check_safety(self) -> None:
        self.terminate_checked = True
        for w in self.workers:
            if w.engine.queue:
                raise SafetyViolation(f"worker {w.id} still holds {w.load} boxes")
            if w.awaiting_initial or (w.phase == w.PRE and w.receivers):
                raise SafetyViolation(f"worker {w.id} has not finished its preprocess exchange")
        for (src, dst), ch in self.channels.items():
            if any(isinstance(m, BoxBatch) for m in ch):
                raise SafetyViolation(f"box batch in flight on {src}->{dst}")

    def enabled(self) -> list[Action]:
        acts: list[Action] = [("work", w.id) for w in self.workers if w.ready()]
        acts.extend(("deliver", s, d) for (s, d), ch in sorted(self.channels.items()) if ch)
        return acts

    def apply(self, act: Action) -> None:
        self.events += 1
        self.log.append(act)
        if act[0] == "work":
            w = self.workers[act[1]]
            self._post(w.id, w.work())
        else:
            _, src, dst = act
            m = self.channels[(src, dst)].popleft()
            if self.trace is not None:
                write_trace_line(self.trace, self.delivered, src, dst, m)
            self.delivered += 1
            w = self.workers[dst]
            if not w.terminated:
                w.receive(m)

    def _done(self) -> bool:
        return all(w.terminated for w in self.workers)

    # -- policies ----------------------------------------------------------

    def _pick_random(self, acts: list[Action]) -> Action:
        works = [a for a in acts if a[0] == "work"]
        delivers = [a for a in acts if a[0] == "deliver"]
        if works and delivers:
            pool = works if self.rng.random() < self.delay else delivers
        else:
            pool = works or delivers
        return pool[self.rng.randrange(len(pool))]

    def _lockstep_tick(self) -> None:
        pending = [(k, len(ch)) for k, ch in sorted(self.channels.items()) if ch]
        for (src, dst), n in pending:
            for _ in range(n):
                self.apply(("deliver", src, dst))
        for w in self.workers:
            if w.ready():
                self.apply(("work", w.id))

    def run(self) -> ParallelResult:
        while self.script and not self._done():
            act = self.script.popleft()
            if act in self.enabled():
                self.apply(act)
        while not self._done():
            if self.events > self.max_events:
                raise RuntimeError("event budget exhausted before termination")
            if self.policy == "lockstep":
                before = self.events
                self._lockstep_tick()
                if self.events == before:
                    raise RuntimeError("deadlock: no enabled action and not terminated")
                continue
            acts = self.enabled()
            if not acts:
                raise RuntimeError("deadlock: no enabled action and not terminated")
            self.apply(self._pick_random(acts))
        return self.result()

    def result(self) -> ParallelResult:
        paving: list[PavingEntry] = []
        for w in self.workers:
            paving.extend(w.paving)
        edge_sent = {(w.id, j): n for w in self.workers for j, n in w.edge_sent.items()}
        edge_recv = {(j, w.id): n for w in self.workers for j, n in w.edge_recv.items()}
        return ParallelResult(
            paving,
            [w.stats for w in self.workers],
            0.0,
            edge_sent,
            edge_recv,
            self.events,
            self.workers[0].rounds,
        )
