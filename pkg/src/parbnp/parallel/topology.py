"""Static routing: balancing neighbourhoods and the preprocess split tree."""

from __future__ import annotations

import math
from functools import lru_cache

__all__ = ["grid_shape", "neighbors", "inverse_neighbors", "preprocess_plan", "plan_height"]


def grid_shape(p: int) -> tuple[int, int]:
    """Near-square ``rows x cols`` factorisation with rows the largest divisor <= sqrt(p)."""
    r = 1
    for d in range(1, math.isqrt(p) + 1):
        if p % d == 0:
            r = d
    return r, p // r


@lru_cache(maxsize=None)
def neighbors(i: int, p: int, size: int) -> tuple[int, ...]:
    """Ring neighbours for ``size == 2``, 2-D torus neighbours for ``size == 4``.

    Duplicates and ``i`` itself are dropped, so small worker counts give fewer
    than ``size`` neighbours.
    """
    if not 0 <= i < p:
        raise ValueError(f"worker id {i} out of range for {p} workers")
    if size == 2:
        out = {(i - 1) % p, (i + 1) % p}
    elif size == 4:
        rows, cols = grid_shape(p)
        r, c = divmod(i, cols)
        out = {
            ((r - 1) % rows) * cols + c,
            ((r + 1) % rows) * cols + c,
            r * cols + (c - 1) % cols,
            r * cols + (c + 1) % cols,
        }
    else:
        raise ValueError(f"neighbourhood size must be 2 or 4, got {size}")
    out.discard(i)
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def inverse_neighbors(i: int, p: int, size: int) -> tuple[int, ...]:
    """Workers that list ``i`` among their neighbours."""
    return tuple(j for j in range(p) if i in neighbors(j, p, size))


@lru_cache(maxsize=None)
def preprocess_plan(p: int) -> tuple[tuple[int, int, int], ...]:
    """Binary split tree as ``(splitter, receiver, stage)`` triples.

    The owner of the worker range ``[a, b)`` hands ``[a + ceil((b-a)/2), b)``
    to its first member; both halves recurse one stage later.
    """
    if p < 1:
        raise ValueError("need at least one worker")
    out: list[tuple[int, int, int]] = []

    def rec(a: int, b: int, stage: int) -> None:
        if b - a <= 1:
            return
        r = a + (b - a + 1) // 2
        out.append((a, r, stage))
        rec(a, r, stage + 1)
        rec(r, b, stage + 1)

    rec(0, p, 0)
    out.sort(key=lambda t: (t[2], t[0]))
    return tuple(out)


def plan_height(plan) -> int:
    return 1 + max((s for _, _, s in plan), default=-1)
