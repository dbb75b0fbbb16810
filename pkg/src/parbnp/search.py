"""Sequential breadth-first branch and prune.

The solver state is a FIFO queue of boxes still to process and the paving of
boxes already classified.  ``step`` pops the front box, prunes it, and either
files it in the paving, drops it, or pushes both bisection halves to the back.
Branching picks the dimension ``depth mod n`` so that boxes at one depth level
are all cut along the same axis, which makes the search level-order.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from typing import IO, Iterable, Iterator

from .contractor import BoxStatus, prune
from .interval import Box, Interval, format_endpoint, parse_endpoint
from .model import NCSP

__all__ = [
    "RunStats",
    "PavingEntry",
    "Paving",
    "SolverState",
    "SolverConfig",
    "SolveTimeout",
    "branch_dim",
    "branch",
    "step",
    "solve_sequential",
    "write_paving",
    "read_paving",
    "paving_key",
]


class SolveTimeout(RuntimeError):
    """Raised when a solve exceeds its wall-clock budget."""


@dataclass
class RunStats:
    branches: int = 0
    prunes: int = 0
    inner: int = 0
    precise: int = 0
    empty: int = 0
    wall_time: float = 0.0
    sent_boxes: int = 0
    recv_boxes: int = 0
    load_msgs: int = 0
    balance_boxes: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> RunStats:
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def merged(self, other: RunStats) -> RunStats:
        out = RunStats()
        for f in fields(self):
            if f.name == "wall_time":
                out.wall_time = max(self.wall_time, other.wall_time)
            else:
                setattr(out, f.name, getattr(self, f.name) + getattr(other, f.name))
        return out


@dataclass(frozen=True)
class PavingEntry:
    box: Box
    status: BoxStatus  # PRECISE or INNER


Paving = list  # list[PavingEntry]


@dataclass
class SolverConfig:
    eps: float

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"precision must be positive, got {self.eps}")


@dataclass
class SolverState:
    queue: deque = field(default_factory=deque)
    paving: list = field(default_factory=list)
    stats: RunStats = field(default_factory=RunStats)

    @classmethod
    def initial(cls, p: NCSP) -> SolverState:
        return cls(deque([p.initial]))

    def __len__(self) -> int:
        return len(self.queue)

    # hooks used by the parallel layer
    def push(self, boxes: Iterable[Box]) -> None:
        self.queue.extend(boxes)

    def take_back(self, k: int) -> list[Box]:
        """Remove up to ``k`` boxes from the back of the queue."""
        out = []
        q = self.queue
        for _ in range(min(k, len(q))):
            out.append(q.pop())
        out.reverse()
        return out


def branch_dim(b: Box) -> int | None:
    """Round-robin split dimension, skipping components that cannot be split."""
    n = b.n
    start = b.depth % n
    for k in range(n):
        d = (start + k) % n
        if b.splittable(d):
            return d
    return None


def branch(b: Box) -> tuple[Box, Box]:
    d = branch_dim(b)
    if d is None:
        raise ValueError(f"no splittable component in {b!r}")
    return b.bisect(d)


def step(p: NCSP, state: SolverState, eps: float) -> BoxStatus:
    """Process the front box of the queue and return its classification."""
    b = state.queue.popleft()
    res = prune(p, b, eps)
    st = state.stats
    st.prunes += 1
    status = res.status
    if status is BoxStatus.EMPTY:
        st.empty += 1
    elif status is BoxStatus.INNER:
        st.inner += 1
        state.paving.append(PavingEntry(res.box, status))
    elif status is BoxStatus.PRECISE:
        st.precise += 1
        state.paving.append(PavingEntry(res.box, status))
    else:
        nb = res.box
        d = branch_dim(nb)
        if d is None:
            # only reachable with eps below float resolution
            st.precise += 1
            state.paving.append(PavingEntry(nb, BoxStatus.PRECISE))
            return BoxStatus.PRECISE
        left, right = nb.bisect(d)
        state.queue.append(left)
        state.queue.append(right)
        st.branches += 1
    return status


def solve_sequential(
    p: NCSP, eps: float, time_budget: float | None = None
) -> tuple[list[PavingEntry], RunStats]:
    SolverConfig(eps)
    state = SolverState.initial(p)
    t0 = time.perf_counter()
    deadline = None if time_budget is None else t0 + time_budget
    q = state.queue
    n = 0
    while q:
        step(p, state, eps)
        n += 1
        if deadline is not None and n % 64 == 0 and time.perf_counter() > deadline:
            raise SolveTimeout(f"sequential solve exceeded {time_budget} s")
    state.stats.wall_time = time.perf_counter() - t0
    return state.paving, state.stats


# -- export -----------------------------------------------------------------


def _entry_json(e: PavingEntry) -> str:
    box = [[format_endpoint(c.lo), format_endpoint(c.hi)] for c in e.box.components]
    # endpoints as JSON numbers when finite
    box = [[_num(lo), _num(hi)] for lo, hi in box]
    return json.dumps({"status": e.status.value, "box": box}, separators=(",", ":"))


def _num(s: str):
    if s in ("inf", "-inf"):
        return s
    return float(s)


def write_paving(paving: Iterable[PavingEntry], fh: IO[str]) -> None:
    for e in paving:
        fh.write(_entry_json(e))
        fh.write("\n")


def iter_paving(fh: IO[str]) -> Iterator[PavingEntry]:
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            d = json.loads(line)
            status = BoxStatus(d["status"])
            comps = tuple(Interval(parse_endpoint(lo), parse_endpoint(hi)) for lo, hi in d["box"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"paving line {lineno}: {exc}") from None
        if status not in (BoxStatus.INNER, BoxStatus.PRECISE):
            raise ValueError(f"paving line {lineno}: status {status.value!r} not allowed")
        yield PavingEntry(Box(comps), status)


def read_paving(fh: IO[str]) -> list[PavingEntry]:
    return list(iter_paving(fh))


def paving_key(paving: Iterable[PavingEntry]) -> list[tuple]:
    """Canonical, order-independent form of a paving for exact comparison."""
    return sorted(
        (e.status.value, tuple((c.lo, c.hi) for c in e.box.components)) for e in paving
    )
