"""Problem representation: expression trees, constraints and NCSP instances.

Expressions are small frozen trees.  For evaluation they are flattened into a
postorder instruction list (``Program``) so that forward evaluation, HC4
projection and forward-mode differentiation all walk the same array.
"""

from __future__ import annotations

import enum
import math
import re
from decimal import Decimal
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence, Union

from . import interval as iv
from .interval import Box, Interval

__all__ = [
    "Const",
    "Var",
    "Binary",
    "Unary",
    "Expr",
    "Relation",
    "Constraint",
    "NCSP",
    "ProblemError",
    "ParseError",
    "eval_expr",
    "parse",
    "to_text",
    "builtin",
    "BUILTINS",
    "decimal_enclosure",
]


class ProblemError(ValueError):
    """Malformed or inconsistent problem definition."""


class ParseError(ProblemError):
    def __init__(self, msg: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


# -- expression nodes -------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Interval
    text: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.text:
            object.__setattr__(self, "text", _const_text(self.value))


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Binary:
    op: str  # add | sub | mul | div
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str  # neg | sqrt | exp | log | sin | cos | pow
    arg: "Expr"
    k: int = 0  # exponent for pow


Expr = Union[Const, Var, Binary, Unary]

BINARY_OPS = ("add", "sub", "mul", "div")
UNARY_OPS = ("neg", "sqrt", "exp", "log", "sin", "cos", "pow")
_FUNCS = ("sqrt", "exp", "log", "sin", "cos", "sqr")


def _float_literal(x: float) -> str:
    # shortest repr when it is exact, else the full (finite) binary expansion
    r = repr(x)
    if Fraction(r) == Fraction(x):
        return r
    return str(Decimal(x))


def _const_text(v: Interval) -> str:
    if v.lo == v.hi:
        return _float_literal(v.lo)
    return f"[{v.lo!r},{v.hi!r}]"


def expr_vars(e: Expr) -> set[int]:
    out: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, Binary):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Unary):
            stack.append(node.arg)
    return out


# -- compiled form ----------------------------------------------------------

# Instruction opcodes.
CONST, VAR, ADD, SUB, MUL, DIV, NEG, SQRT, EXP, LOG, SIN, COS, POW = range(13)
_BIN_CODE = {"add": ADD, "sub": SUB, "mul": MUL, "div": DIV}
_UN_CODE = {"neg": NEG, "sqrt": SQRT, "exp": EXP, "log": LOG, "sin": SIN, "cos": COS, "pow": POW}


@dataclass(frozen=True)
class Program:
    """Postorder instruction list; the last instruction is the root.

    Each instruction is ``(opcode, a, b, payload)`` where ``a``/``b`` index
    earlier instructions.  ``payload`` is the constant (CONST), the variable
    index (VAR) or the integer exponent (POW).
    """

    code: tuple[tuple[int, int, int, object], ...]

    def __len__(self) -> int:
        return len(self.code)


def compile_expr(e: Expr) -> Program:
    code: list[tuple[int, int, int, object]] = []

    def emit(node: Expr) -> int:
        if isinstance(node, Const):
            code.append((CONST, -1, -1, node.value))
        elif isinstance(node, Var):
            code.append((VAR, -1, -1, node.index))
        elif isinstance(node, Binary):
            a = emit(node.left)
            b = emit(node.right)
            code.append((_BIN_CODE[node.op], a, b, None))
        elif isinstance(node, Unary):
            a = emit(node.arg)
            code.append((_UN_CODE[node.op], a, -1, node.k))
        else:
            raise TypeError(f"not an expression node: {node!r}")
        return len(code) - 1

    emit(e)
    return Program(tuple(code))


_add, _sub, _mul, _div = iv.add, iv.sub, iv.mul, iv.div
_UNARY_FN = {NEG: iv.neg, SQRT: iv.sqrt, EXP: iv.exp, LOG: iv.log, SIN: iv.sin, COS: iv.cos}


def forward(prog: Program, comps: Sequence[Interval]) -> list[Interval] | None:
    """Evaluate every node bottom-up; ``None`` if some node is empty."""
    vals: list[Interval] = []
    append = vals.append
    for op, a, b, payload in prog.code:
        if op == VAR:
            v = comps[payload]  # type: ignore[index]
        elif op == CONST:
            v = payload  # type: ignore[assignment]
        elif op == ADD:
            v = _add(vals[a], vals[b])
        elif op == SUB:
            v = _sub(vals[a], vals[b])
        elif op == MUL:
            v = _mul(vals[a], vals[b])
        elif op == DIV:
            v = _div(vals[a], vals[b])
        elif op == POW:
            v = iv.pow_int(vals[a], payload)  # type: ignore[arg-type]
        else:
            v = _UNARY_FN[op](vals[a])
        if v.lo > v.hi:
            return None
        append(v)
    return vals


# -- constraints and problems -----------------------------------------------


class Relation(enum.Enum):
    EQ_ZERO = "eq"
    GEQ_ZERO = "ineq"


@dataclass(frozen=True)
class Constraint:
    expr: Expr
    relation: Relation

    @cached_property
    def program(self) -> Program:
        return compile_expr(self.expr)

    @property
    def is_equation(self) -> bool:
        return self.relation is Relation.EQ_ZERO

    def satisfied_by(self, value: float, tol: float = 0.0) -> bool:
        if self.relation is Relation.EQ_ZERO:
            return abs(value) <= tol
        return value >= -tol

    def __eq__(self, other) -> bool:
        if not isinstance(other, Constraint):
            return NotImplemented
        return self.expr == other.expr and self.relation == other.relation

    def __hash__(self) -> int:
        return hash((self.expr, self.relation))


@dataclass(frozen=True)
class NCSP:
    """Variables, bounded initial box and a conjunction of constraints.

    ``projection`` lists the indices of the ``e`` variables solved for by the
    inner-box verification; the remaining variables act as parameters.
    """

    names: tuple[str, ...]
    initial: Box
    constraints: tuple[Constraint, ...]
    projection: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(set(self.names)) != n:
            raise ProblemError("duplicate variable names")
        if self.initial.n != n:
            raise ProblemError(f"initial box has {self.initial.n} components, expected {n}")
        for c in self.initial.components:
            if c.is_empty or not c.is_bounded:
                raise ProblemError(f"initial domain {c!r} must be a bounded non-empty interval")
        for con in self.constraints:
            bad = [i for i in expr_vars(con.expr) if not 0 <= i < n]
            if bad:
                raise ProblemError(f"variable index {bad[0]} out of range")
        e = self.e
        proj = tuple(self.projection)
        if not proj and e:
            if e > n:
                raise ProblemError(f"{e} equations over {n} variables")
            proj = tuple(range(e))
        if len(proj) != e:
            raise ProblemError(f"projection lists {len(proj)} variables but there are {e} equations")
        if len(set(proj)) != len(proj) or any(not 0 <= j < n for j in proj):
            raise ProblemError("projection variables must be distinct valid indices")
        object.__setattr__(self, "projection", proj)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def e(self) -> int:
        return sum(1 for c in self.constraints if c.relation is Relation.EQ_ZERO)

    @property
    def i(self) -> int:
        return sum(1 for c in self.constraints if c.relation is Relation.GEQ_ZERO)

    @property
    def projection_count(self) -> int:
        return len(self.projection)

    @property
    def equations(self) -> tuple[Constraint, ...]:
        return tuple(c for c in self.constraints if c.relation is Relation.EQ_ZERO)

    @property
    def inequalities(self) -> tuple[Constraint, ...]:
        return tuple(c for c in self.constraints if c.relation is Relation.GEQ_ZERO)

    @property
    def parameters(self) -> tuple[int, ...]:
        proj = set(self.projection)
        return tuple(j for j in range(self.n) if j not in proj)


def eval_expr(expr: Expr, box: Box | Sequence[Interval]) -> Interval:
    """Natural interval extension of ``expr`` over ``box``."""
    comps = box.components if isinstance(box, Box) else tuple(box)
    vals = forward(compile_expr(expr), comps)
    if vals is None:
        return iv.EMPTY
    return vals[-1]


def eval_point(expr: Expr, x: Sequence[float]) -> float:
    """Plain floating-point evaluation (no enclosure guarantee)."""
    if isinstance(expr, Const):
        return 0.5 * (expr.value.lo + expr.value.hi)
    if isinstance(expr, Var):
        return float(x[expr.index])
    if isinstance(expr, Binary):
        a, b = eval_point(expr.left, x), eval_point(expr.right, x)
        return {"add": a + b, "sub": a - b, "mul": a * b}.get(expr.op, a / b if b else math.nan)
    a = eval_point(expr.arg, x)
    op = expr.op
    if op == "neg":
        return -a
    if op == "pow":
        return a**expr.k
    if op == "sqrt":
        return math.sqrt(a) if a >= 0 else math.nan
    if op == "log":
        return math.log(a) if a > 0 else math.nan
    return getattr(math, op)(a)


# -- decimal literals -------------------------------------------------------


def decimal_enclosure(text: str) -> Interval:
    """Tightest float interval containing the exact decimal value of ``text``."""
    exact = Fraction(text)
    f = float(exact)
    ff = Fraction(f)
    if ff == exact:
        return Interval(f, f)
    if ff < exact:
        return Interval(f, math.nextafter(f, math.inf))
    return Interval(math.nextafter(f, -math.inf), f)


PI = Const(Interval(math.pi, math.nextafter(math.pi, math.inf)), "pi")


# -- parser -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>>=|<=|[-+*/^()\[\],;:=])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))  # type: ignore[arg-type]
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.pos = 0
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.domains: list[Interval] = []
        self.constraints: list[Constraint] = []
        self.proj: list[int] | None = None

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, msg: str, tok: _Tok | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def advance(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind not in ("op", "ident"):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def program(self) -> NCSP:
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind == "ident" and t.text == "var":
                self.decl()
            elif t.kind == "ident" and t.text in ("eq", "ineq"):
                self.constraint()
            elif t.kind == "ident" and t.text == "proj":
                self.projection()
            else:
                raise self.error(f"expected 'var', 'eq', 'ineq' or 'proj', found {t.text!r}")
        n = len(self.names)
        e = sum(1 for c in self.constraints if c.relation is Relation.EQ_ZERO)
        if e and n <= e and self.proj is None:
            raise ProblemError(
                f"{e} equations over {n} variables: problem is not under-constrained "
                "(add a 'proj:' clause to solve a square system)"
            )
        return NCSP(
            tuple(self.names),
            Box(tuple(self.domains)),
            tuple(self.constraints),
            tuple(self.proj or ()),
        )

    def real(self) -> float:
        sign = 1.0
        if self.tok.text in ("-", "+"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        t = self.tok
        if t.kind != "num":
            raise self.error(f"expected a number, found {t.text!r}")
        self.advance()
        return sign * float(t.text)

    def decl(self) -> None:
        self.advance()
        t = self.tok
        if t.kind != "ident":
            raise self.error("expected variable name")
        if t.text in self.index or t.text in _RESERVED:
            raise self.error(f"duplicate or reserved variable name {t.text!r}")
        self.advance()
        self.expect("in")
        lb = self.expect("[")
        lo = self.real()
        self.expect(",")
        hi = self.real()
        self.expect("]")
        self.expect(";")
        if lo > hi:
            raise self.error(f"malformed interval [{lo}, {hi}]", lb)
        self.index[t.text] = len(self.names)
        self.names.append(t.text)
        self.domains.append(Interval(lo, hi))

    def constraint(self) -> None:
        kind = self.advance().text
        self.expect(":")
        lhs = self.expr()
        rel_tok = self.tok
        if kind == "eq":
            self.expect("=")
            relation = Relation.EQ_ZERO
        elif rel_tok.text in (">=", "<="):
            self.advance()
            relation = Relation.GEQ_ZERO
        else:
            raise self.error("expected '>=' or '<=' in inequality")
        rhs = self.expr()
        self.expect(";")
        if rel_tok.text == "<=":
            lhs, rhs = rhs, lhs
        if not (isinstance(rhs, Const) and rhs.value == Interval(0.0, 0.0)):
            lhs = Binary("sub", lhs, rhs)
        self.constraints.append(Constraint(lhs, relation))

    def projection(self) -> None:
        self.advance()
        self.expect(":")
        if self.proj is not None:
            raise self.error("duplicate 'proj:' clause")
        proj: list[int] = []
        while self.tok.text != ";":
            t = self.tok
            if t.kind != "ident":
                raise self.error("expected variable name in 'proj:'")
            if t.text not in self.index:
                raise self.error(f"unknown identifier {t.text!r}")
            proj.append(self.index[t.text])
            self.advance()
            if self.tok.text == ",":
                self.advance()
        self.expect(";")
        self.proj = proj

    # EXPR := term (('+'|'-') term)*
    def expr(self) -> Expr:
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = "add" if self.advance().text == "+" else "sub"
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = "mul" if self.advance().text == "*" else "div"
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.tok.text == "-" and self.tok.kind == "op":
            self.advance()
            literal = self.tok.kind == "num" or self.tok.text == "pi"
            arg = self.factor()
            if literal and isinstance(arg, Const):
                # negation is exact, so a signed literal stays a constant
                text = arg.text[1:] if arg.text.startswith("-") else "-" + arg.text
                return Const(iv.neg(arg.value), text)
            return Unary("neg", arg)
        if self.tok.text == "+" and self.tok.kind == "op":
            self.advance()
            return self.factor()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.text == "^":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                raise self.error("exponent must be an integer literal")
            self.advance()
            return Unary("pow", base, sign * int(t.text))
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(decimal_enclosure(t.text), t.text)
        if t.kind == "ident":
            self.advance()
            if t.text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if t.text == "sqr":
                    return Unary("pow", arg, 2)
                return Unary(t.text, arg)
            if t.text == "pi":
                return PI
            if t.text not in self.index:
                raise self.error(f"unknown identifier {t.text!r}", t)
            return Var(self.index[t.text])
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"unexpected token {t.text or 'end of input'!r}")


_RESERVED = {"var", "in", "eq", "ineq", "proj", "pi", *_FUNCS}


def parse(text: str) -> NCSP:
    """Parse problem source text into an :class:`NCSP`."""
    return _Parser(text).program()


# -- printer ----------------------------------------------------------------


def expr_text(e: Expr, names: Sequence[str]) -> str:
    if isinstance(e, Const):
        body = e.text[1:] if e.text.startswith("-") else e.text
        if body == "pi" or re.fullmatch(r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?", body):
            return e.text if body == e.text else f"(-{body})"
        if e.value.lo == e.value.hi:
            v = e.value.lo
            return _float_literal(v) if v >= 0 else f"(-{_float_literal(-v)})"
        raise ValueError(f"constant {e.value!r} has no literal form")
    if isinstance(e, Var):
        return names[e.index]
    if isinstance(e, Binary):
        sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[e.op]
        return f"({expr_text(e.left, names)} {sym} {expr_text(e.right, names)})"
    if e.op == "neg":
        if isinstance(e.arg, Const):
            return f"(-({expr_text(e.arg, names)}))"
        return f"(-{expr_text(e.arg, names)})"
    if e.op == "pow":
        return f"({expr_text(e.arg, names)})^{e.k}"
    return f"{e.op}({expr_text(e.arg, names)})"


def to_text(p: NCSP) -> str:
    """Render ``p`` in the problem grammar; ``parse(to_text(p)) == p``."""
    lines = []
    for name, dom in zip(p.names, p.initial.components):
        lines.append(f"var {name} in [{dom.lo!r}, {dom.hi!r}];")
    for c in p.constraints:
        rel = "=" if c.is_equation else ">="
        lines.append(f"{c.relation.value}: {expr_text(c.expr, p.names)} {rel} 0;")
    if p.projection:
        lines.append("proj: " + " ".join(p.names[j] for j in p.projection) + ";")
    return "\n".join(lines) + "\n"


# -- builtin benchmark analogs ----------------------------------------------

SPHERE_PLANE = """\
# Unit 3-sphere in R^4 cut by the hyperplane through the origin orthogonal to
# (1,1,1,1): a 2-dimensional solution manifold.
var x1 in [-1, 1];
var x2 in [-1, 1];
var x3 in [-1, 1];
var x4 in [-1, 1];
eq: x1^2 + x2^2 + x3^2 + x4^2 - 1 = 0;
eq: x1 + x2 + x3 + x4 = 0;
"""

# Planar 3-RPR-like mechanism.  Base anchors sit on a circle of radius 4 at
# 90, 210 and 330 degrees; platform joints sit on a circle of radius 1 around
# the platform centre (x, y), rotated by th.  At the home pose (0, 0, 0) every
# leg has length 3.  Leg lengths l1..l3 are interval parameters.
THREE_RPR = """\
var x in [-0.3, 0.3];
var y in [-0.3, 0.3];
var th in [-0.3, 0.3];
var l1 in [2.9, 3.1];
var l2 in [2.9, 3.1];
var l3 in [2.9, 3.1];
eq: (x + cos(th + 1.5707963267948966))^2 + (y + sin(th + 1.5707963267948966) - 4)^2 - l1^2 = 0;
eq: (x + cos(th + 3.6651914291880923) + 3.4641016151377544)^2 + (y + sin(th + 3.6651914291880923) + 2)^2 - l2^2 = 0;
eq: (x + cos(th + 5.7595865315812871) - 3.4641016151377544)^2 + (y + sin(th + 5.7595865315812871) + 2)^2 - l3^2 = 0;
"""

BUILTINS = {"sphere-plane": SPHERE_PLANE, "3rpr-analog": THREE_RPR}


def builtin(name: str) -> NCSP:
    try:
        src = BUILTINS[name]
    except KeyError:
        raise ProblemError(
            f"unknown builtin problem {name!r} (choose from {', '.join(sorted(BUILTINS))})"
        ) from None
    return parse(src)
