"""Prune: hull-consistency contraction followed by inner-box verification.

``hc4_revise`` is the usual forward/backward traversal of one constraint's
expression tree; ``propagate`` iterates it over all constraints to a (bounded)
fixpoint.  ``verify_inner`` certifies that every inequality is strictly
satisfied on the box and, for equations, runs a parametric Krawczyk test: if
the Krawczyk image of the projection components lands in their interior then
every parameter value in the box admits a solution inside it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import interval as iv
from .interval import EMPTY, Box, Interval
from .model import (
    ADD,
    CONST,
    COS,
    DIV,
    EXP,
    LOG,
    MUL,
    NCSP,
    NEG,
    POW,
    SIN,
    SQRT,
    SUB,
    VAR,
    Constraint,
    Program,
    Relation,
    forward,
)

__all__ = [
    "BoxStatus",
    "PruneResult",
    "hc4_revise",
    "propagate",
    "jacobian",
    "verify_inner",
    "prune",
    "RTOL",
    "MAX_ROUNDS",
]

RTOL = 1e-3
MAX_ROUNDS = 50

_ZERO = Interval(0.0, 0.0)
_ONE = Interval(1.0, 1.0)
_NONNEG = Interval(0.0, math.inf)
_PI = Interval(math.pi, math.nextafter(math.pi, math.inf))
_HALF_PI = iv.mul(_PI, Interval(0.5, 0.5))

_intersect = iv.intersect
_add, _sub, _mul, _div = iv.add, iv.sub, iv.mul, iv.div


class BoxStatus(enum.Enum):
    EMPTY = "empty"
    PRECISE = "precise"
    INNER = "inner"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class PruneResult:
    status: BoxStatus
    box: Box | None


# -- HC4 --------------------------------------------------------------------


def _cos_preimage(x: Interval, z: Interval) -> Interval:
    """Contract ``x`` under ``cos(x) ∈ z`` when ``x`` lies on one monotone branch."""
    if not x.is_bounded:
        return x
    k = round(0.5 * (x.lo + x.hi) / (2.0 * math.pi))
    base = _mul(_PI, Interval(2.0 * k, 2.0 * k))
    a = iv.acos_hull(z)
    if a.is_empty:
        return EMPTY
    # decreasing branch [2k pi, 2k pi + pi]
    if x.lo >= base.hi and x.hi <= _add(base, _PI).lo:
        return _intersect(x, _add(base, a))
    # increasing branch [2k pi - pi, 2k pi]
    if x.lo >= _sub(base, _PI).hi and x.hi <= base.lo:
        return _intersect(x, _sub(base, a))
    return x


def _sin_preimage(x: Interval, z: Interval) -> Interval:
    # sin(x) = cos(x - pi/2)
    y = _cos_preimage(_sub(x, _HALF_PI), z)
    if y.is_empty:
        return EMPTY
    return _intersect(x, _add(y, _HALF_PI))


def _pow_preimage(x: Interval, z: Interval, k: int) -> Interval:
    if k == 1:
        return _intersect(x, z)
    if k <= 0:
        return x
    if k % 2 == 0:
        r = iv.root_nonneg(_intersect(z, _NONNEG), k)
        if r.is_empty:
            return EMPTY
        return iv.hull(_intersect(x, r), _intersect(x, iv.neg(r)))
    lo = iv.root_nonneg(Interval(z.lo, z.lo), k).lo if z.lo >= 0 else -iv.root_nonneg(Interval(-z.lo, -z.lo), k).hi
    hi = iv.root_nonneg(Interval(z.hi, z.hi), k).hi if z.hi >= 0 else -iv.root_nonneg(Interval(-z.hi, -z.hi), k).lo
    return _intersect(x, Interval(lo, hi))


def _quotient_preimage(x: Interval, z: Interval, y: Interval) -> Interval:
    """Contract ``x`` under ``x * y ∈ z``; any ``x`` works when 0 lies in both."""
    if z.lo <= 0.0 <= z.hi and y.lo <= 0.0 <= y.hi:
        return x
    return _intersect(x, _div(z, y))


def _revise(prog: Program, comps: list[Interval], target: Interval) -> bool:
    """Run HC4-revise in place on ``comps``; False when a domain empties."""
    vals = forward(prog, comps)
    if vals is None:
        return False
    code = prog.code
    root = len(code) - 1
    z = _intersect(vals[root], target)
    if z.lo > z.hi:
        return False
    vals[root] = z
    for i in range(root, -1, -1):
        op, a, b, payload = code[i]
        z = vals[i]
        if op == VAR:
            d = _intersect(comps[payload], z)  # type: ignore[index]
            if d.lo > d.hi:
                return False
            comps[payload] = d  # type: ignore[index]
            continue
        if op == CONST:
            if _intersect(payload, z).is_empty:  # type: ignore[arg-type]
                return False
            continue
        x = vals[a]
        if op == ADD:
            y = vals[b]
            x = _intersect(x, _sub(z, y))
            if x.lo > x.hi:
                return False
            y = _intersect(y, _sub(z, x))
            if y.lo > y.hi:
                return False
            vals[a], vals[b] = x, y
            continue
        if op == SUB:
            y = vals[b]
            x = _intersect(x, _add(z, y))
            if x.lo > x.hi:
                return False
            y = _intersect(y, _sub(x, z))
            if y.lo > y.hi:
                return False
            vals[a], vals[b] = x, y
            continue
        if op == MUL:
            y = vals[b]
            x = _quotient_preimage(x, z, y)
            if x.lo > x.hi:
                return False
            y = _quotient_preimage(y, z, x)
            if y.lo > y.hi:
                return False
            vals[a], vals[b] = x, y
            continue
        if op == DIV:
            y = vals[b]
            x = _intersect(x, _mul(z, y))
            if x.lo > x.hi:
                return False
            y = _quotient_preimage(y, x, z)
            if y.lo > y.hi:
                return False
            vals[a], vals[b] = x, y
            continue
        if op == NEG:
            x = _intersect(x, iv.neg(z))
        elif op == POW:
            x = _pow_preimage(x, z, payload)  # type: ignore[arg-type]
        elif op == SQRT:
            x = _intersect(x, iv.sqr(_intersect(z, _NONNEG)))
        elif op == EXP:
            x = _intersect(x, iv.log(_intersect(z, _NONNEG)))
        elif op == LOG:
            x = _intersect(x, iv.exp(z))
        elif op == COS:
            x = _cos_preimage(x, z)
        elif op == SIN:
            x = _sin_preimage(x, z)
        if x.lo > x.hi:
            return False
        vals[a] = x
    return True


def _target(c: Constraint) -> Interval:
    return _ZERO if c.relation is Relation.EQ_ZERO else _NONNEG


def hc4_revise(c: Constraint, b: Box) -> Box | None:
    """Contract ``b`` w.r.t. one constraint; ``None`` when ``b`` holds no solution of it."""
    comps = list(b.components)
    if not _revise(c.program, comps, _target(c)):
        return None
    return Box(comps, b.depth)


def propagate(p: NCSP, b: Box, rtol: float = RTOL, max_rounds: int = MAX_ROUNDS) -> Box | None:
    """Apply ``hc4_revise`` round-robin until a full round shrinks no
    component by more than ``rtol`` of its previous width."""
    comps = list(b.components)
    work = [(c.program, _target(c)) for c in p.constraints]
    for _ in range(max_rounds):
        before = [c.hi - c.lo for c in comps]
        for prog, target in work:
            if not _revise(prog, comps, target):
                return None
        progress = False
        for w0, c in zip(before, comps):
            if w0 - (c.hi - c.lo) > rtol * w0:
                progress = True
                break
        if not progress:
            break
    return Box(comps, b.depth)


# -- differentiation --------------------------------------------------------


def _gradient(
    prog: Program, comps: Sequence[Interval], cols: Sequence[int]
) -> tuple[Interval, list[Interval]] | None:
    """Forward-mode interval differentiation w.r.t. the variables in ``cols``.

    Returns the value enclosure and the partial-derivative enclosures, or
    ``None`` when the function is undefined on the whole box.
    """
    m = len(cols)
    col_of = {j: k for k, j in enumerate(cols)}
    vals: list[Interval] = []
    grads: list[list[Interval] | None] = []  # None = identically zero
    for op, a, b, payload in prog.code:
        g: list[Interval] | None
        if op == VAR:
            v = comps[payload]  # type: ignore[index]
            k = col_of.get(payload)  # type: ignore[arg-type]
            if k is None:
                g = None
            else:
                g = [_ZERO] * m
                g[k] = _ONE
        elif op == CONST:
            v, g = payload, None  # type: ignore[assignment]
        else:
            x, gx = vals[a], grads[a]
            if op in (ADD, SUB, MUL, DIV):
                y, gy = vals[b], grads[b]
                if op == ADD:
                    v = _add(x, y)
                    g = _combine(gx, gy, lambda p, q: _add(p, q), m)
                elif op == SUB:
                    v = _sub(x, y)
                    g = _combine(gx, gy, lambda p, q: _sub(p, q), m)
                elif op == MUL:
                    v = _mul(x, y)
                    g = _combine(
                        None if gx is None else [_mul(d, y) for d in gx],
                        None if gy is None else [_mul(x, d) for d in gy],
                        lambda p, q: _add(p, q),
                        m,
                    )
                else:
                    v = _div(x, y)
                    # (x/y)' = (x' - v*y') / y
                    num = _combine(
                        gx,
                        None if gy is None else [_mul(v, d) for d in gy],
                        lambda p, q: _sub(p, q),
                        m,
                    )
                    g = None if num is None else [_div(d, y) for d in num]
            else:
                if op == NEG:
                    v, dfdx = iv.neg(x), Interval(-1.0, -1.0)
                elif op == POW:
                    k = payload  # type: ignore[assignment]
                    v = iv.pow_int(x, k)
                    dfdx = _mul(Interval(float(k), float(k)), iv.pow_int(x, k - 1)) if k else _ZERO
                elif op == SQRT:
                    v = iv.sqrt(x)
                    dfdx = _div(_ONE, _mul(Interval(2.0, 2.0), v))
                elif op == EXP:
                    v = iv.exp(x)
                    dfdx = v
                elif op == LOG:
                    v = iv.log(x)
                    dfdx = _div(_ONE, _intersect(x, _NONNEG))
                elif op == SIN:
                    v, dfdx = iv.sin(x), iv.cos(x)
                elif op == COS:
                    v, dfdx = iv.cos(x), iv.neg(iv.sin(x))
                else:  # pragma: no cover - opcode table is closed
                    raise ValueError(f"unknown opcode {op}")
                g = None if gx is None else [_mul(dfdx, d) for d in gx]
        if v.lo > v.hi:
            return None
        vals.append(v)
        grads.append(g)
    root = grads[-1]
    return vals[-1], (root if root is not None else [_ZERO] * m)


def _combine(gx, gy, fn, m):
    if gx is None and gy is None:
        return None
    if gx is None:
        gx = [_ZERO] * m
    if gy is None:
        gy = [_ZERO] * m
    return [fn(p, q) for p, q in zip(gx, gy)]


def jacobian(p: NCSP, b: Box, cols: Sequence[int] | None = None) -> list[list[Interval]] | None:
    """Interval Jacobian of the equations (rows) w.r.t. ``cols`` (default all
    variables); ``None`` when some equation is undefined on ``b``."""
    if cols is None:
        cols = range(p.n)
    cols = list(cols)
    rows = []
    for c in p.equations:
        res = _gradient(c.program, b.components, cols)
        if res is None:
            return None
        rows.append(res[1])
    return rows


# -- inner verification -----------------------------------------------------


def verify_inner(p: NCSP, b: Box) -> bool:
    comps = b.components
    if any(not c.is_bounded for c in comps):
        return False
    for c in p.inequalities:
        vals = forward(c.program, comps)
        if vals is None or not vals[-1].lo > 0.0:
            return False
    eqs = p.equations
    if not eqs:
        return True
    proj = p.projection
    e = len(proj)
    X = [comps[j] for j in proj]
    if any(x.lo >= x.hi for x in X):
        return False
    J = jacobian(p, b, proj)
    if J is None:
        return False
    mid = np.array([[0.5 * (d.lo + d.hi) for d in row] for row in J], dtype=float)
    if not np.all(np.isfinite(mid)):
        return False
    try:
        Y = np.linalg.inv(mid)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(Y)):
        return False
    xt = [iv.midpoint(x) for x in X]
    pc = list(comps)
    for j, v in zip(proj, xt):
        pc[j] = Interval(v, v)
    F = []
    for c in eqs:
        vals = forward(c.program, pc)
        if vals is None:
            return False
        F.append(vals[-1])
    Yi = [[Interval(float(Y[k, m]), float(Y[k, m])) for m in range(e)] for k in range(e)]
    dX = [_sub(x, Interval(t, t)) for x, t in zip(X, xt)]
    for k in range(e):
        acc = Interval(xt[k], xt[k])
        for m in range(e):
            acc = _sub(acc, _mul(Yi[k][m], F[m]))
        for j in range(e):
            s = _ONE if j == k else _ZERO
            for m in range(e):
                s = _sub(s, _mul(Yi[k][m], J[m][j]))
            acc = _add(acc, _mul(s, dX[j]))
        if not (X[k].lo < acc.lo and acc.hi < X[k].hi):
            return False
    return True


# -- prune ------------------------------------------------------------------


def prune(p: NCSP, b: Box, eps: float) -> PruneResult:
    """Contract and classify one box.  Inner takes priority over precise."""
    nb = propagate(p, b)
    if nb is None:
        return PruneResult(BoxStatus.EMPTY, None)
    if verify_inner(p, nb):
        return PruneResult(BoxStatus.INNER, nb)
    if nb.width() < eps:
        return PruneResult(BoxStatus.PRECISE, nb)
    return PruneResult(BoxStatus.UNDECIDED, nb)
