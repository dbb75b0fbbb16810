"""Worker state machine shared by the real and the deterministic runtimes.

A worker never touches a transport.  ``receive`` absorbs one message and
``work`` performs one unit of activity (a branch-and-prune step, a preprocess
split, a balancing round or a token move), returning the messages to send as
``(destination, message)`` pairs.

Termination uses a token on the ring ``0 -> 1 -> ... -> #p-1 -> 0`` with
message counting: each worker keeps ``counter = batches sent - batches
received`` and turns black when it sends or receives a box batch.  Worker 0
declares termination when the token comes back white, worker 0 is white and
idle, and the accumulated count plus its own counter is zero.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from ..interval import Box
from ..model import NCSP
from ..search import RunStats, SolverState, step
from .messages import BLACK, WHITE, BoxBatch, LoadReport, Message, Terminate, Token
from .topology import inverse_neighbors, neighbors, preprocess_plan

__all__ = [
    "ParallelConfig",
    "BalancerState",
    "WorkerRuntime",
    "ProtocolError",
    "split_queue",
    "balance_round",
]


class ProtocolError(RuntimeError):
    """A message arrived that the routing tables say cannot exist."""


@dataclass(frozen=True)
class ParallelConfig:
    """Parallel solver parameters.

    ``nbb``: queue size that triggers a preprocess split; ``ns``: steps between
    balancing rounds; ``delta``: load margin; ``neighbors``: 2 (ring) or 4
    (torus).  ``balance_target`` picks how much a balancing round ships:
    ``"neighborhood"`` fills neighbours up to the mean load of the
    neighbourhood including the sender, ``"neighbors"`` only up to the mean of
    the neighbours' reported loads.  Either way a round only ships while the
    neighbours' mean is below ``delta``.
    """

    workers: int = 1
    nbb: int = 32
    ns: int = 100
    delta: int = 10
    neighbors: int = 2
    preprocess: bool = True
    balance_target: str = "neighborhood"

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.workers > 0xFFFF:
            raise ValueError("worker ids must fit in 16 bits")
        if self.nbb < 2:
            raise ValueError("nbb must be >= 2")
        if self.ns < 1:
            raise ValueError("ns must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.neighbors not in (2, 4):
            raise ValueError("neighbors must be 2 or 4")
        if self.balance_target not in ("neighborhood", "neighbors"):
            raise ValueError("balance_target must be 'neighborhood' or 'neighbors'")


@dataclass
class BalancerState:
    out: tuple[int, ...]  # N_i: workers we ship to
    inv: tuple[int, ...]  # N_i^-1: workers we report our load to
    loads: dict[int, int] = field(default_factory=dict)
    steps_since_balance: int = 0


def split_queue(queue: list[Box]) -> tuple[list[Box], list[Box]]:
    """Sort by volume (descending, stable) and deal alternate boxes out.

    Returns ``(kept, sent)``: the odd sorted positions are sent, so
    ``len(sent) == len(queue) // 2``.
    """
    order = sorted(queue, key=lambda b: -b.volume())
    return order[0::2], order[1::2]


def balance_round(w: WorkerRuntime) -> list[tuple[int, Message]]:
    """One load-balancing round for worker ``w``."""
    bal = w.balancer
    cfg = w.cfg
    load = len(w.engine.queue)
    out: list[tuple[int, Message]] = [(j, LoadReport(w.id, load)) for j in bal.inv]
    w.engine.stats.load_msgs += len(bal.inv)
    bal.steps_since_balance = 0
    known = [bal.loads[j] for j in bal.out if j in bal.loads]
    if not known:
        return out
    mu = sum(known) / len(known)
    if not mu < cfg.delta:
        return out
    if cfg.balance_target == "neighborhood":
        target = math.ceil((sum(known) + load) / (len(known) + 1))
    else:
        target = math.ceil(mu)
    surplus = max(0, load - cfg.delta)
    for j in bal.out:
        if surplus <= 0:
            break
        lj = bal.loads.get(j)
        if lj is None:
            continue
        k = min(target - lj, surplus)
        if k <= 0:
            continue
        boxes = w.engine.take_back(k)
        if not boxes:
            break
        surplus -= len(boxes)
        bal.loads[j] = lj + len(boxes)
        out.append((j, w.ship(j, boxes, balancing=True)))
    return out


class WorkerRuntime:
    PRE = "pre"
    MAIN = "main"

    def __init__(self, wid: int, problem: NCSP, eps: float, cfg: ParallelConfig) -> None:
        p = cfg.workers
        if not 0 <= wid < p:
            raise ValueError(f"worker id {wid} out of range")
        self.id = wid
        self.problem = problem
        self.eps = eps
        self.cfg = cfg
        self.engine = SolverState()
        if wid == 0:
            self.engine.queue.append(problem.initial)
        self.balancer = BalancerState(
            neighbors(wid, p, cfg.neighbors) if p > 1 else (),
            inverse_neighbors(wid, p, cfg.neighbors) if p > 1 else (),
        )
        plan = preprocess_plan(p) if cfg.preprocess else ()
        self.parent: int | None = next((s for s, r, _ in plan if r == wid), None)
        self.receivers: list[int] = [r for s, r, _ in plan if s == wid]
        self.awaiting_initial = self.parent is not None
        self.phase = self.PRE if plan else self.MAIN
        self.color = WHITE
        self.counter = 0
        self.token: Token | None = None
        self.token_home = wid == 0  # worker 0 owns the token before the first round
        self.terminated = False
        self.reported_idle = False
        self.started = False
        self.edge_sent: Counter[int] = Counter()
        self.edge_recv: Counter[int] = Counter()
        self.rounds = 0  # token rounds initiated (worker 0 only)

    # -- state -------------------------------------------------------------

    @property
    def load(self) -> int:
        return len(self.engine.queue)

    @property
    def idle(self) -> bool:
        return not self.engine.queue

    @property
    def stats(self) -> RunStats:
        return self.engine.stats

    @property
    def paving(self):
        return self.engine.paving

    def ready(self) -> bool:
        """Whether ``work`` would do anything right now."""
        if self.terminated:
            return False
        if not self.started:
            return True
        if self.engine.queue:
            return True
        if self.phase == self.PRE and not self.awaiting_initial:
            return True
        if self.phase == self.MAIN and not self.reported_idle and self.balancer.inv:
            return True
        return self.token is not None or self.token_home

    # -- sending -----------------------------------------------------------

    def ship(self, dest: int, boxes: list[Box], balancing: bool = False) -> BoxBatch:
        self.counter += 1
        self.color = BLACK
        st = self.engine.stats
        st.sent_boxes += len(boxes)
        if balancing:
            st.balance_boxes += len(boxes)
        self.edge_sent[dest] += len(boxes)
        return BoxBatch(self.id, tuple(boxes))

    def _reports(self) -> list[tuple[int, Message]]:
        inv = self.balancer.inv
        self.engine.stats.load_msgs += len(inv)
        return [(j, LoadReport(self.id, self.load)) for j in inv]

    # -- receiving ---------------------------------------------------------

    def receive(self, m: Message) -> None:
        if isinstance(m, BoxBatch):
            src = m.sender
            from_parent = self.awaiting_initial and src == self.parent
            if not from_parent and src not in self.balancer.inv and src != self.parent:
                raise ProtocolError(f"worker {self.id}: box batch from non-neighbour {src}")
            if not m.boxes and not from_parent:
                raise ProtocolError(f"worker {self.id}: empty balancing batch from {src}")
            self.engine.push(m.boxes)
            self.counter -= 1
            self.color = BLACK
            self.engine.stats.recv_boxes += len(m.boxes)
            self.edge_recv[src] += len(m.boxes)
            if from_parent:
                self.awaiting_initial = False
            if m.boxes:
                self.reported_idle = False
        elif isinstance(m, LoadReport):
            if m.sender not in self.balancer.out:
                raise ProtocolError(f"worker {self.id}: load report from non-neighbour {m.sender}")
            self.balancer.loads[m.sender] = m.load
        elif isinstance(m, Token):
            if self.token is not None or self.token_home:
                raise ProtocolError(f"worker {self.id}: second token")
            self.token = m
        elif isinstance(m, Terminate):
            self.terminated = True
        else:
            raise ProtocolError(f"unknown message {m!r}")

    # -- activity ----------------------------------------------------------

    def work(self) -> list[tuple[int, Message]]:
        if self.terminated:
            return []
        if not self.started:
            self.started = True
            if self.phase == self.MAIN:
                return self._reports()
            return []
        if self.phase == self.PRE and not self.awaiting_initial:
            return self._preprocess_work()
        q = self.engine.queue
        if q:
            step(self.problem, self.engine, self.eps)
            if self.phase == self.MAIN:
                bal = self.balancer
                bal.steps_since_balance += 1
                if bal.steps_since_balance >= self.cfg.ns:
                    return balance_round(self)
            return []
        out: list[tuple[int, Message]] = []
        if self.phase == self.MAIN and not self.reported_idle:
            self.reported_idle = True
            out.extend(self._reports())
        out.extend(self._token_action())
        return out

    def _preprocess_work(self) -> list[tuple[int, Message]]:
        if not self.receivers:
            self.phase = self.MAIN
            return self._reports()
        q = self.engine.queue
        if q and len(q) < self.cfg.nbb:
            step(self.problem, self.engine, self.eps)
            return []
        kept, sent = split_queue(list(q))
        q.clear()
        q.extend(kept)
        dest = self.receivers.pop(0)
        return [(dest, self.ship(dest, sent))]

    def _token_action(self) -> list[tuple[int, Message]]:
        p = self.cfg.workers
        nxt = (self.id + 1) % p
        if self.id == 0:
            if self.token_home:
                if p == 1:
                    self.terminated = True
                    return []
                self.token_home = False
                self.color = WHITE
                self.rounds += 1
                return [(nxt, Token(WHITE, 0))]
            if self.token is None:
                return []
            tok, self.token = self.token, None
            if tok.color == WHITE and self.color == WHITE and tok.count + self.counter == 0:
                self.terminated = True
                return [(j, Terminate()) for j in range(1, p)]
            self.color = WHITE
            self.rounds += 1
            return [(nxt, Token(WHITE, 0))]
        if self.token is None:
            return []
        tok, self.token = self.token, None
        color = BLACK if self.color == BLACK else tok.color
        self.color = WHITE
        return [(nxt, Token(color, tok.count + self.counter))]
