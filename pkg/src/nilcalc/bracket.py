"""Bracket polynomial expressions over integer variables.

Expressions are small trees of constants, variables, sums, products and the
signed fractional part ``{x}``.  They are written in a prefix syntax::

    (* (frac (* (const 2/7) (var 0))) (* (const 3/5) (var 0)))

which is ``{alpha n} beta n`` with alpha = 2/7, beta = 3/5.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple, Union

from ._report import Report
from .nilseq import NilcharSpec, eval_nilchar_flagged
from .scalar import RationalLike, as_rational, format_rational, signed_frac

MAX_FRAC_DEPTH = 3


class BracketSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class BracketExpr:
    op: str  # const | var | + | * | frac
    args: Tuple

    def __post_init__(self):
        if self.op not in ("const", "var", "+", "*", "frac"):
            raise BracketSyntaxError(f"unknown node {self.op!r}")
        if self.frac_depth() > MAX_FRAC_DEPTH:
            raise BracketSyntaxError(f"fractional parts nested deeper than {MAX_FRAC_DEPTH}")

    def frac_depth(self) -> int:
        if self.op in ("const", "var"):
            return 0
        inner = max(a.frac_depth() for a in self.args)
        return inner + 1 if self.op == "frac" else inner

    @property
    def arity(self) -> int:
        """Number of free variables, i.e. one more than the largest index used."""
        if self.op == "var":
            return self.args[0] + 1
        if self.op == "const":
            return 0
        return max(a.arity for a in self.args)

    def __add__(self, other: "BracketExpr") -> "BracketExpr":
        return add(self, _expr(other))

    def __radd__(self, other) -> "BracketExpr":
        return add(_expr(other), self)

    def __mul__(self, other: "BracketExpr") -> "BracketExpr":
        return mul(self, _expr(other))

    def __rmul__(self, other) -> "BracketExpr":
        return mul(_expr(other), self)

    def __neg__(self) -> "BracketExpr":
        return mul(const(-1), self)

    def __sub__(self, other) -> "BracketExpr":
        return add(self, -_expr(other))

    def __str__(self) -> str:
        return to_prefix(self)


def _expr(x) -> BracketExpr:
    return x if isinstance(x, BracketExpr) else const(x)


def const(c: RationalLike) -> BracketExpr:
    return BracketExpr("const", (as_rational(c),))


def var(i: int = 0) -> BracketExpr:
    if i < 0:
        raise BracketSyntaxError("variable indices are nonnegative")
    return BracketExpr("var", (int(i),))


def add(*xs: BracketExpr) -> BracketExpr:
    return BracketExpr("+", tuple(xs))


def mul(*xs: BracketExpr) -> BracketExpr:
    return BracketExpr("*", tuple(xs))


def frac(x: BracketExpr) -> BracketExpr:
    return BracketExpr("frac", (x,))


def eval_bracket(e: BracketExpr, n: Union[int, Sequence[int]]) -> Fraction:
    """Exact value with {.} the signed fractional part."""
    n = (n,) if isinstance(n, int) else tuple(n)
    if len(n) < e.arity:
        raise ValueError(f"expression needs {e.arity} variables, got {len(n)}")
    return _eval(e, n)


def _eval(e: BracketExpr, n) -> Fraction:
    op = e.op
    if op == "const":
        return e.args[0]
    if op == "var":
        return Fraction(n[e.args[0]])
    if op == "+":
        return sum((_eval(a, n) for a in e.args), Fraction(0))
    if op == "*":
        out = Fraction(1)
        for a in e.args:
            out *= _eval(a, n)
        return out
    return signed_frac(_eval(e.args[0], n))


# --------------------------------------------------------------------------
# prefix syntax

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def parse_bracket(text: str) -> BracketExpr:
    tokens = [t for t in _TOKEN.findall(text) if t.strip()]
    expr, pos = _parse(tokens, 0)
    if pos != len(tokens):
        raise BracketSyntaxError(f"trailing input after position {pos}")
    return expr


def _parse(tokens, pos):
    if pos >= len(tokens) or tokens[pos] != "(":
        raise BracketSyntaxError("expected '('")
    if pos + 1 >= len(tokens):
        raise BracketSyntaxError("unexpected end of input")
    head = tokens[pos + 1]
    pos += 2
    if head in ("const", "var"):
        if pos >= len(tokens):
            raise BracketSyntaxError(f"{head} needs an argument")
        atom = tokens[pos]
        pos += 1
        if pos >= len(tokens) or tokens[pos] != ")":
            raise BracketSyntaxError("expected ')'")
        try:
            node = const(atom) if head == "const" else var(int(atom))
        except (ValueError, ZeroDivisionError) as exc:
            raise BracketSyntaxError(f"bad {head} argument {atom!r}") from exc
        return node, pos + 1
    if head not in ("+", "*", "frac"):
        raise BracketSyntaxError(f"unknown operator {head!r}")
    args = []
    while pos < len(tokens) and tokens[pos] != ")":
        sub, pos = _parse(tokens, pos)
        args.append(sub)
    if pos >= len(tokens):
        raise BracketSyntaxError("missing ')'")
    if head == "frac" and len(args) != 1:
        raise BracketSyntaxError("frac takes exactly one argument")
    if head != "frac" and len(args) < 2:
        raise BracketSyntaxError(f"{head} takes at least two arguments")
    return BracketExpr(head, tuple(args)), pos + 1


def to_prefix(e: BracketExpr) -> str:
    if e.op == "const":
        return f"(const {format_rational(e.args[0])})"
    if e.op == "var":
        return f"(var {e.args[0]})"
    return f"({e.op} " + " ".join(to_prefix(a) for a in e.args) + ")"


# --------------------------------------------------------------------------
# standard forms and identities


def bracket_ab(alpha: RationalLike, beta: RationalLike, i: int = 0, j: int = 0) -> BracketExpr:
    """{alpha n_i} beta n_j."""
    return mul(frac(mul(const(alpha), var(i))), const(beta), var(j))


def bracket_a2b(alpha: RationalLike, beta: RationalLike) -> BracketExpr:
    """{alpha n^2} beta n."""
    n = var(0)
    return mul(frac(mul(const(alpha), n, n)), const(beta), n)


def multilinear_diagonal(alpha: RationalLike, beta: RationalLike) -> BracketExpr:
    """2{alpha n} beta n - {alpha n}{beta n}."""
    n = var(0)
    fa = frac(mul(const(alpha), n))
    fb = frac(mul(const(beta), n))
    return add(mul(const(2), fa, const(beta), n), mul(const(-1), fa, fb))


def symmetrized(alpha: RationalLike, beta: RationalLike) -> BracketExpr:
    """(1/2){alpha n1} beta n2 + (1/2){alpha n2} beta n1."""
    half = const(Fraction(1, 2))
    return add(mul(half, bracket_ab(alpha, beta, 0, 1)), mul(half, bracket_ab(alpha, beta, 1, 0)))


def check_product_identity(alpha: RationalLike, beta: RationalLike, n_max: int) -> Report:
    """{an}bn + {bn}an == abn^2 + {an}{bn} mod 1 for n = 1..n_max."""
    a, b = as_rational(alpha), as_rational(beta)
    p, q, r, s = a.numerator, a.denominator, b.numerator, b.denominator
    qs = q * s
    for n in range(1, n_max + 1):
        # {an} = A/q and {bn} = B/s with A, B the signed residues; everything over qs
        A, B = _signed_residue(p * n, q), _signed_residue(r * n, s)
        diff = A * r * n + B * p * n - p * r * n * n - A * B
        if diff % qs:
            fa, fb = Fraction(A, q), Fraction(B, s)
            lhs = fa * b * n + fb * a * n
            rhs = a * b * n * n + fa * fb
            return Report.failed("product-identity", "mismatch", {"n": n, "lhs": lhs, "rhs": rhs})
    return Report.passed("product-identity", alpha=a, beta=b, n_max=n_max)


def _signed_residue(m: int, q: int) -> int:
    """A with A = m mod q and A/q in (-1/2, 1/2]."""
    A = m % q
    return A - q if 2 * A > q else A


def compare_with_nilchar(
    e: BracketExpr,
    spec: NilcharSpec,
    N: int,
    max_flag_rate: float = 0.01,
) -> Report:
    """e(eval_bracket(e, n)) against the scalar unsmoothed nilcharacter on [N].

    Orbits on Z^k with a one-variable expression are read on the diagonal
    n -> (n, ..., n).  Boundary-flagged points are skipped and counted.
    """
    if not spec.unsmoothed or spec.dim != 1:
        raise ValueError("comparison needs an unsmoothed single-chart spec")
    k = spec.orbit.k
    if e.arity > k:
        raise ValueError("expression has more variables than the orbit domain")
    flagged = 0
    for n in range(1, N + 1):
        point = (n,) * k
        value, flag = eval_nilchar_flagged(spec, point)
        if flag:
            flagged += 1
            continue
        want = signed_frac(eval_bracket(e, point))
        if value.phases[0] != want or value.amps[0] != 1.0:
            return Report.failed(
                "bracket-vs-nilchar", "mismatch",
                {"n": n, "bracket": want, "nilchar": value.phases[0]},
                flagged=flagged,
            )
    rate = flagged / N
    if rate > max_flag_rate:
        return Report.failed("bracket-vs-nilchar", "boundary-flag-rate", rate, flagged=flagged, N=N)
    return Report.passed("bracket-vs-nilchar", N=N, flagged=flagged, compared=N - flagged)
