"""Closed real intervals with outward rounding, and boxes built from them.

Endpoints are binary64 floats.  Each computed endpoint is rounded outward by
one ULP unless an error-free transformation shows the float result is exact,
so ``add([1,2],[3,4])`` is exactly ``[4,6]`` while ``[0.1] + [0.2]`` widens.
Transcendental functions are widened by two ULPs since libm only promises
faithful (not correct) rounding.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

__all__ = [
    "Interval",
    "EMPTY",
    "ENTIRE",
    "Box",
    "DegenerateDimension",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "sqr",
    "pow_int",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "intersect",
    "hull",
    "arith",
    "unary",
    "midpoint",
    "root_nonneg",
    "asin_hull",
    "acos_hull",
    "format_endpoint",
    "parse_endpoint",
]

INF = math.inf
_MAX = 1.7976931348623157e308
_TINY = 5e-324
_nextafter = math.nextafter
_isfinite = math.isfinite

# Veltkamp splitting overflows above this magnitude, and products below the
# lower limit lose bits to subnormal rounding; outside the safe band fall back
# to blind widening.
_SAFE_HI = 2.0**995
_SAFE_LO = 2.0**-969
_SPLITTER = 134217729.0  # 2**27 + 1


def _down(x: float) -> float:
    return _nextafter(x, -INF)


def _up(x: float) -> float:
    return _nextafter(x, INF)


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _two_prod_err(a: float, b: float, p: float) -> float:
    c = _SPLITTER * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLITTER * b
    bh = c - (c - b)
    bl = b - bh
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _safe(*xs: float) -> bool:
    for x in xs:
        ax = abs(x)
        if ax > _SAFE_HI or (ax != 0.0 and ax < _SAFE_LO):
            return False
    return True


# -- directed rounding of single operations ---------------------------------


def add_down(a: float, b: float) -> float:
    s = a + b
    if not _isfinite(s):
        if s == INF and _isfinite(a) and _isfinite(b):
            return _MAX
        return s
    if not (_isfinite(a) and _isfinite(b)):
        return s
    return _down(s) if _two_sum_err(a, b, s) < 0.0 else s


def add_up(a: float, b: float) -> float:
    s = a + b
    if not _isfinite(s):
        if s == -INF and _isfinite(a) and _isfinite(b):
            return -_MAX
        return s
    return _up(s) if _two_sum_err(a, b, s) > 0.0 else s


def _mul_err(a: float, b: float, p: float) -> float | None:
    # exact a*b - p, or None outside the range where Veltkamp splitting is exact
    ap = abs(p)
    if not (_SAFE_LO < ap < _SAFE_HI and abs(a) < _SAFE_HI and abs(b) < _SAFE_HI):
        return None
    c = _SPLITTER * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLITTER * b
    bh = c - (c - b)
    bl = b - bh
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def mul_down(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    e = _mul_err(a, b, p)
    if e is None:
        if p == INF and _isfinite(a) and _isfinite(b):
            return _MAX
        if p - p != 0.0:  # infinite
            return p
        if p == 0.0:  # underflow; the exact product has the sign of a*b
            return 0.0 if (a > 0.0) == (b > 0.0) else -_TINY
        return _nextafter(p, -INF)
    return _nextafter(p, -INF) if e < 0.0 else p


def mul_up(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    e = _mul_err(a, b, p)
    if e is None:
        if p == -INF and _isfinite(a) and _isfinite(b):
            return -_MAX
        if p - p != 0.0:
            return p
        if p == 0.0:
            return _TINY if (a > 0.0) == (b > 0.0) else 0.0
        return _nextafter(p, INF)
    return _nextafter(p, INF) if e > 0.0 else p


def _div_residual(a: float, b: float, q: float) -> float | None:
    # Sign of (exact a/b - q), derived from a - q*b.
    if not _safe(a, b, q) or q == 0.0:
        return None
    p = q * b
    if not _isfinite(p):
        return None
    r = (a - p) - _two_prod_err(q, b, p)
    return r if b > 0.0 else -r


def div_down(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        if math.isinf(a):
            return -INF
        return -0.0 if (a > 0) != (b > 0) else 0.0
    q = a / b
    if not _isfinite(q):
        if _isfinite(a) and q == INF:
            return _MAX
        return q
    if q == 0.0:  # underflow
        return 0.0 if (a > 0.0) == (b > 0.0) else -_TINY
    r = _div_residual(a, b, q)
    if r is None:
        return _down(q)
    return _down(q) if r < 0.0 else q


def div_up(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        if math.isinf(a):
            return INF
        return 0.0 if (a > 0) == (b > 0) else -0.0
    q = a / b
    if not _isfinite(q):
        if _isfinite(a) and q == -INF:
            return -_MAX
        return q
    if q == 0.0:
        return _TINY if (a > 0.0) == (b > 0.0) else 0.0
    r = _div_residual(a, b, q)
    if r is None:
        return _up(q)
    return _up(q) if r > 0.0 else q


def sqrt_down(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x == INF:
        return INF
    s = math.sqrt(x)
    if not _safe(s, x):
        return _down(s)
    p = s * s
    e = _two_prod_err(s, s, p)
    # s*s = p + e exactly; sign(s*s - x) decides which side the root is.
    d = (p - x) + e
    return _down(s) if d > 0.0 else s


def sqrt_up(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x == INF:
        return INF
    s = math.sqrt(x)
    if not _safe(s, x):
        return _up(s)
    p = s * s
    e = _two_prod_err(s, s, p)
    d = (p - x) + e
    return _up(s) if d < 0.0 else s


def _pow_nonneg_down(x: float, k: int) -> float:
    r = 1.0
    base = x
    while k:
        if k & 1:
            r = mul_down(r, base)
        k >>= 1
        if k:
            base = mul_down(base, base)
    return r


def _pow_nonneg_up(x: float, k: int) -> float:
    r = 1.0
    base = x
    while k:
        if k & 1:
            r = mul_up(r, base)
        k >>= 1
        if k:
            base = mul_up(base, base)
    return r


def _wide_down(x: float) -> float:
    return _down(_down(x))


def _wide_up(x: float) -> float:
    return _up(_up(x))


# -- Interval ---------------------------------------------------------------


class Interval(NamedTuple):
    """Closed interval ``[lo, hi]``; ``lo > hi`` encodes the empty set."""

    lo: float
    hi: float

    @classmethod
    def point(cls, x: float) -> Interval:
        return cls(x, x)

    @classmethod
    def checked(cls, lo: float, hi: float) -> Interval:
        """Construct from user data, rejecting ``lo > hi`` and NaN."""
        lo, hi = float(lo), float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoint is NaN")
        if lo > hi:
            raise ValueError(f"malformed interval [{lo}, {hi}]: lo > hi")
        if lo == INF or hi == -INF:
            raise ValueError(f"malformed interval [{lo}, {hi}]")
        return cls(lo, hi)

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def is_bounded(self) -> bool:
        return _isfinite(self.lo) and _isfinite(self.hi)

    @property
    def width(self) -> float:
        if self.lo > self.hi:
            return 0.0
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return midpoint(self)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def subset(self, other: Interval) -> bool:
        if self.is_empty:
            return True
        return other.lo <= self.lo and self.hi <= other.hi

    def interior_subset(self, other: Interval) -> bool:
        """Strict inclusion in the interior of ``other``."""
        if self.is_empty:
            return True
        return other.lo < self.lo and self.hi < other.hi

    def __add__(self, other):  # type: ignore[override]
        return add(self, _as_interval(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_interval(other))

    def __rsub__(self, other):
        return sub(_as_interval(other), self)

    def __mul__(self, other):  # type: ignore[override]
        return mul(self, _as_interval(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _as_interval(other))

    def __rtruediv__(self, other):
        return div(_as_interval(other), self)

    def __neg__(self):
        return neg(self)

    def __and__(self, other):
        return intersect(self, other)

    def __or__(self, other):
        return hull(self, other)

    def __repr__(self) -> str:
        if self.is_empty:
            return "Interval.EMPTY"
        return f"[{format_endpoint(self.lo)}, {format_endpoint(self.hi)}]"


_new = tuple.__new__
EMPTY = Interval(INF, -INF)
ENTIRE = Interval(-INF, INF)
_ZERO = Interval(0.0, 0.0)


def _as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float)):
        return Interval(float(x), float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Interval")


def _make(lo: float, hi: float) -> Interval:
    if math.isnan(lo) or math.isnan(hi):
        return ENTIRE
    return Interval(lo, hi)


# -- binary operations ------------------------------------------------------


def _sum_down(x: float, y: float) -> float:
    s = x + y
    if -_MAX <= s <= _MAX:
        bb = s - x
        if (x - (s - bb)) + (y - bb) < 0.0:
            return _nextafter(s, -INF)
        return s
    if s == INF:  # overflow of finite operands
        return _MAX
    return s


def _sum_up(x: float, y: float) -> float:
    s = x + y
    if -_MAX <= s <= _MAX:
        bb = s - x
        if (x - (s - bb)) + (y - bb) > 0.0:
            return _nextafter(s, INF)
        return s
    if s == -INF:
        return -_MAX
    return s


def add(a: Interval, b: Interval) -> Interval:
    al, ah = a
    bl, bh = b
    if al > ah or bl > bh:
        return EMPTY
    return _new(Interval, (_sum_down(al, bl), _sum_up(ah, bh)))


def sub(a: Interval, b: Interval) -> Interval:
    al, ah = a
    bl, bh = b
    if al > ah or bl > bh:
        return EMPTY
    return _new(Interval, (_sum_down(al, -bh), _sum_up(ah, -bl)))


def mul(a: Interval, b: Interval) -> Interval:
    al, ah = a
    bl, bh = b
    if al > ah or bl > bh:
        return EMPTY
    if al >= 0.0:
        if bl >= 0.0:
            lo, hi = mul_down(al, bl), mul_up(ah, bh)
        elif bh <= 0.0:
            lo, hi = mul_down(ah, bl), mul_up(al, bh)
        else:
            lo, hi = mul_down(ah, bl), mul_up(ah, bh)
    elif ah <= 0.0:
        if bl >= 0.0:
            lo, hi = mul_down(al, bh), mul_up(ah, bl)
        elif bh <= 0.0:
            lo, hi = mul_down(ah, bh), mul_up(al, bl)
        else:
            lo, hi = mul_down(al, bh), mul_up(al, bl)
    # 0 strictly inside a
    elif bl >= 0.0:
        lo, hi = mul_down(al, bh), mul_up(ah, bh)
    elif bh <= 0.0:
        lo, hi = mul_down(ah, bl), mul_up(al, bl)
    else:
        lo = min(mul_down(al, bh), mul_down(ah, bl))
        hi = max(mul_up(al, bl), mul_up(ah, bh))
    return _new(Interval, (lo, hi))


def div(a: Interval, b: Interval) -> Interval:
    """Extended division; a divisor containing zero yields the hull of the
    (possibly two-piece) quotient set."""
    if a.lo > a.hi or b.lo > b.hi:
        return EMPTY
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    if bl > 0.0 or bh < 0.0:
        if bl > 0.0:
            if al >= 0.0:
                return _make(div_down(al, bh), div_up(ah, bl))
            if ah <= 0.0:
                return _make(div_down(al, bl), div_up(ah, bh))
            return _make(div_down(al, bl), div_up(ah, bl))
        if al >= 0.0:
            return _make(div_down(ah, bh), div_up(al, bl))
        if ah <= 0.0:
            return _make(div_down(ah, bl), div_up(al, bh))
        return _make(div_down(ah, bh), div_up(al, bh))
    # zero in divisor
    if bl == 0.0 and bh == 0.0:
        return EMPTY
    if al <= 0.0 <= ah:
        return ENTIRE
    if bl == 0.0:
        if al > 0.0:
            return Interval(div_down(al, bh), INF)
        return Interval(-INF, div_up(ah, bh))
    if bh == 0.0:
        if al > 0.0:
            return Interval(-INF, div_up(al, bl))
        return Interval(div_down(ah, bl), INF)
    return ENTIRE


# -- unary operations -------------------------------------------------------


def neg(a: Interval) -> Interval:
    if a.lo > a.hi:
        return EMPTY
    return Interval(-a.hi, -a.lo)


def sqr(a: Interval) -> Interval:
    if a.lo > a.hi:
        return EMPTY
    lo, hi = a.lo, a.hi
    if lo >= 0.0:
        return Interval(mul_down(lo, lo), mul_up(hi, hi))
    if hi <= 0.0:
        return Interval(mul_down(hi, hi), mul_up(lo, lo))
    m = max(-lo, hi)
    return Interval(0.0, mul_up(m, m))


def pow_int(a: Interval, k: int) -> Interval:
    """``a**k`` for an integer exponent ``k`` (negative allowed)."""
    if a.lo > a.hi:
        return EMPTY
    if k == 0:
        return Interval(1.0, 1.0)
    if k < 0:
        return div(Interval(1.0, 1.0), pow_int(a, -k))
    if k == 1:
        return a
    if k == 2:
        return sqr(a)
    lo, hi = a.lo, a.hi
    if k % 2 == 0:
        if lo >= 0.0:
            return Interval(_pow_nonneg_down(lo, k), _pow_nonneg_up(hi, k))
        if hi <= 0.0:
            return Interval(_pow_nonneg_down(-hi, k), _pow_nonneg_up(-lo, k))
        return Interval(0.0, _pow_nonneg_up(max(-lo, hi), k))
    # odd exponent: monotone increasing
    if lo >= 0.0:
        new_lo = _pow_nonneg_down(lo, k)
    else:
        new_lo = -_pow_nonneg_up(-lo, k)
    if hi >= 0.0:
        new_hi = _pow_nonneg_up(hi, k)
    else:
        new_hi = -_pow_nonneg_down(-hi, k)
    return Interval(new_lo, new_hi)


def sqrt(a: Interval) -> Interval:
    if a.lo > a.hi or a.hi < 0.0:
        return EMPTY
    return Interval(sqrt_down(max(a.lo, 0.0)), sqrt_up(a.hi))


def _exp_down(x: float) -> float:
    if x == -INF:
        return 0.0
    if x == 0.0:
        return 1.0
    try:
        v = _wide_down(math.exp(x))
    except OverflowError:
        return _MAX
    # keep exp(x) >= 1 for x > 0 so widening never crosses the exact exp(0)
    return max(1.0 if x > 0.0 else 0.0, v)


def _exp_up(x: float) -> float:
    if x == 0.0:
        return 1.0
    try:
        v = math.exp(x)
    except OverflowError:
        return INF
    if v == INF:
        return INF
    v = _wide_up(v)
    return min(1.0, v) if x < 0.0 else v


def exp(a: Interval) -> Interval:
    if a.lo > a.hi:
        return EMPTY
    return Interval(_exp_down(a.lo), _exp_up(a.hi))


def _log_down(x: float) -> float:
    if x == 0.0:
        return -INF
    if x == 1.0:
        return 0.0
    if x == INF:
        return _MAX
    v = _wide_down(math.log(x))
    return max(0.0, v) if x > 1.0 else v


def _log_up(x: float) -> float:
    if x == 0.0:
        return -_MAX
    if x == 1.0:
        return 0.0
    if x == INF:
        return INF
    v = _wide_up(math.log(x))
    return min(0.0, v) if x < 1.0 else v


def log(a: Interval) -> Interval:
    if a.lo > a.hi or a.hi < 0.0:
        return EMPTY
    if a.hi == 0.0:
        return EMPTY
    return Interval(_log_down(max(a.lo, 0.0)), _log_up(a.hi))


_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


def _contains_angle(lo: float, hi: float, phase: float) -> bool:
    """Whether ``[lo, hi]`` may contain ``phase + 2*k*pi`` for some integer k.

    The float value of pi is inexact, so the test is padded: a false positive
    only loosens the enclosure to the extremum value.
    """
    pad = 1e-12 * max(1.0, abs(lo), abs(hi))
    k = math.ceil((lo - pad - phase) / _TWO_PI)
    return phase + k * _TWO_PI <= hi + pad


def _sin_widen(x: float, v: float) -> tuple[float, float]:
    # float pi is below the real pi, so sin(x) > 0 on (0, pi] and < 0 on [-pi, 0)
    lo, hi = _wide_down(v), _wide_up(v)
    if 0.0 < x <= math.pi:
        lo = max(0.0, lo)
    elif -math.pi <= x < 0.0:
        hi = min(0.0, hi)
    return lo, hi


def _cos_widen(x: float, v: float) -> tuple[float, float]:
    return _wide_down(v), _wide_up(v)


def _trig(a: Interval, f, widen, max_phase: float, min_phase: float) -> Interval:
    if a.lo > a.hi:
        return EMPTY
    lo, hi = a.lo, a.hi
    if not (_isfinite(lo) and _isfinite(hi)) or hi - lo >= _TWO_PI:
        return Interval(-1.0, 1.0)
    if abs(lo) > 1e8 or abs(hi) > 1e8:
        return Interval(-1.0, 1.0)
    flo, fhi = f(lo), f(hi)
    # f(0) is exact for both sin and cos
    lo_lo, lo_hi = (flo, flo) if lo == 0.0 else widen(lo, flo)
    hi_lo, hi_hi = (fhi, fhi) if hi == 0.0 else widen(hi, fhi)
    r_lo = max(-1.0, min(lo_lo, hi_lo))
    r_hi = min(1.0, max(lo_hi, hi_hi))
    if _contains_angle(lo, hi, max_phase):
        r_hi = 1.0
    if _contains_angle(lo, hi, min_phase):
        r_lo = -1.0
    return Interval(r_lo, r_hi)


def sin(a: Interval) -> Interval:
    return _trig(a, math.sin, _sin_widen, _HALF_PI, -_HALF_PI)


def cos(a: Interval) -> Interval:
    return _trig(a, math.cos, _cos_widen, 0.0, math.pi)


def asin_hull(a: Interval) -> Interval:
    """Outward enclosure of ``asin`` over ``a`` clipped to ``[-1, 1]``."""
    lo, hi = max(a.lo, -1.0), min(a.hi, 1.0)
    if lo > hi:
        return EMPTY
    return Interval(_wide_down(math.asin(lo)), _wide_up(math.asin(hi)))


def acos_hull(a: Interval) -> Interval:
    """Outward enclosure of ``acos`` over ``a`` clipped to ``[-1, 1]``."""
    lo, hi = max(a.lo, -1.0), min(a.hi, 1.0)
    if lo > hi:
        return EMPTY
    return Interval(_wide_down(math.acos(hi)), _wide_up(math.acos(lo)))


def root_nonneg(a: Interval, k: int) -> Interval:
    """Outward enclosure of the nonnegative ``k``-th root over ``a ∩ [0, ∞)``."""
    lo, hi = max(a.lo, 0.0), a.hi
    if lo > hi:
        return EMPTY
    if k == 2:
        return Interval(sqrt_down(lo), sqrt_up(hi))
    return Interval(_root_down(lo, k), _root_up(hi, k))


def _root_up(x: float, k: int) -> float:
    if x == 0.0 or x == INF:
        return x
    r = _wide_up(x ** (1.0 / k))
    # r**k must certainly reach x
    for _ in range(64):
        if _pow_nonneg_down(r, k) >= x:
            return r
        r = _up(r * (1.0 + 2.0**-40))
    return INF


def _root_down(x: float, k: int) -> float:
    if x == 0.0 or x == INF:
        return x
    r = _wide_down(x ** (1.0 / k))
    for _ in range(64):
        if _pow_nonneg_up(r, k) <= x:
            return r
        r = _down(r * (1.0 - 2.0**-40))
    return 0.0


# -- lattice operations -----------------------------------------------------


def intersect(a: Interval, b: Interval) -> Interval:
    al, ah = a
    bl, bh = b
    lo = al if al > bl else bl
    hi = ah if ah < bh else bh
    if lo > hi:
        return EMPTY
    return _new(Interval, (lo, hi))


def hull(a: Interval, b: Interval) -> Interval:
    if a.lo > a.hi:
        return b
    if b.lo > b.hi:
        return a
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def midpoint(a: Interval) -> float:
    """Rounded centre of ``a``, always inside it.

    Semi-unbounded intervals fall back to their finite endpoint; the entire
    line maps to 0.
    """
    lo, hi = a.lo, a.hi
    if lo > hi:
        raise ValueError("midpoint of empty interval")
    if lo == -INF:
        return 0.0 if hi == INF else hi
    if hi == INF:
        return lo
    m = 0.5 * lo + 0.5 * hi
    if m < lo:
        return lo
    if m > hi:
        return hi
    return m


# -- op dispatch ------------------------------------------------------------

_BINARY = {"add": add, "sub": sub, "mul": mul, "div": div}
_UNARY = {
    "neg": neg,
    "sqr": sqr,
    "sqrt": sqrt,
    "exp": exp,
    "log": log,
    "sin": sin,
    "cos": cos,
}


def arith(op: str, a: Interval, b: Interval) -> Interval:
    try:
        fn = _BINARY[op]
    except KeyError:
        raise ValueError(f"unknown binary op {op!r}") from None
    return fn(a, b)


def unary(op: str, a: Interval, k: int | None = None) -> Interval:
    if op == "pow":
        if k is None:
            raise ValueError("pow requires an integer exponent")
        return pow_int(a, k)
    try:
        fn = _UNARY[op]
    except KeyError:
        raise ValueError(f"unknown unary op {op!r}") from None
    return fn(a)


# -- serialisation of endpoints ---------------------------------------------


def format_endpoint(x: float) -> str | float:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return repr(float(x))


def parse_endpoint(v) -> float:
    if isinstance(v, str):
        return float(v)
    return float(v)


# -- Box --------------------------------------------------------------------


class DegenerateDimension(ValueError):
    """Raised when asked to bisect a zero-width or unbounded component."""


class Box:
    """Interval vector plus the number of bisections since the root box.

    Immutable by convention; every transformation returns a new box.
    """

    __slots__ = ("components", "depth")

    def __init__(self, components: Sequence[Interval], depth: int = 0) -> None:
        self.components: tuple[Interval, ...] = tuple(components)
        self.depth = depth

    @classmethod
    def of(cls, bounds: Iterable[Sequence[float]], depth: int = 0) -> Box:
        return cls(tuple(Interval.checked(lo, hi) for lo, hi in bounds), depth)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Box):
            return NotImplemented
        return self.depth == other.depth and self.components == other.components

    def __hash__(self) -> int:
        return hash((self.components, self.depth))

    def __getstate__(self):
        return (self.components, self.depth)

    def __setstate__(self, state) -> None:
        self.components, self.depth = state

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def is_empty(self) -> bool:
        return any(c.lo > c.hi for c in self.components)

    def width(self) -> float:
        w = 0.0
        for c in self.components:
            if not c.is_bounded:
                return INF
            d = c.hi - c.lo
            if d > w:
                w = d
        return w

    def volume(self) -> float:
        v = 1.0
        for c in self.components:
            if not c.is_bounded:
                return INF
            v *= c.hi - c.lo
        return v

    def midpoint(self) -> tuple[float, ...]:
        return tuple(midpoint(c) for c in self.components)

    def replace(self, i: int, comp: Interval) -> Box:
        comps = list(self.components)
        comps[i] = comp
        return Box(tuple(comps), self.depth)

    def with_components(self, comps: Sequence[Interval]) -> Box:
        return Box(tuple(comps), self.depth)

    def splittable(self, dim: int) -> bool:
        c = self.components[dim]
        if not c.is_bounded or c.lo >= c.hi:
            return False
        m = midpoint(c)
        return c.lo < m < c.hi

    def bisect(self, dim: int) -> tuple[Box, Box]:
        c = self.components[dim]
        if not c.is_bounded:
            raise DegenerateDimension(f"component {dim} is unbounded")
        if c.lo >= c.hi:
            raise DegenerateDimension(f"component {dim} has zero width")
        m = midpoint(c)
        d = self.depth + 1
        left = list(self.components)
        right = list(self.components)
        left[dim] = Interval(c.lo, m)
        right[dim] = Interval(m, c.hi)
        return Box(tuple(left), d), Box(tuple(right), d)

    def contains_point(self, x: Sequence[float]) -> bool:
        return all(c.lo <= v <= c.hi for c, v in zip(self.components, x))

    def subset(self, other: Box) -> bool:
        return all(a.subset(b) for a, b in zip(self.components, other.components))

    def bounds(self) -> list[list[float]]:
        return [[c.lo, c.hi] for c in self.components]

    def __repr__(self) -> str:
        inner = ", ".join(repr(c) for c in self.components)
        return f"Box(({inner}), depth={self.depth})"
