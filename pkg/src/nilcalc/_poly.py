"""Sparse multivariate polynomials over Q, used to derive group laws.

Only what the symbolic collector needs: ring operations, scalar division,
integer powers and code generation.  Monomials are sorted tuples of
``(variable_index, exponent)`` pairs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Sequence, Tuple

Monomial = Tuple[Tuple[int, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Monomial, Fraction] | None = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    @staticmethod
    def var(i: int) -> "Poly":
        return Poly({((i, 1),): Fraction(1)})

    @staticmethod
    def const(c) -> "Poly":
        return Poly({(): Fraction(c)})

    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly({m: c * other for m, c in self.terms.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return False
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def degree_in(self, var: int) -> int:
        return max((dict(m).get(var, 0) for m in self.terms), default=0)

    def is_const(self) -> bool:
        return all(not m for m in self.terms)

    def const_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def __repr__(self):
        return f"Poly({self.terms!r})"


def to_source(p, names: Callable[[int], str]) -> str:
    """Render a Poly (or plain rational) as a Python expression."""
    if not isinstance(p, Poly):
        return _const_src(Fraction(p))
    if not p.terms:
        return "0"
    parts = []
    for m, c in sorted(p.terms.items()):
        factors = []
        for v, e in m:
            factors.append(names(v) if e == 1 else f"{names(v)}**{e}")
        if c != 1 or not factors:
            factors.insert(0, _const_src(c))
        parts.append("*".join(factors))
    return "(" + " + ".join(parts) + ")"


def _const_src(c: Fraction) -> str:
    if c.denominator == 1:
        return f"({c.numerator})"
    return f"_F({c.numerator}, {c.denominator})"


def compile_vector(arg_names: Sequence[str], polys: Sequence, names: Callable[[int], str], fname: str):
    """Compile a list of polynomials into ``fname(*arg_names) -> tuple``."""
    body = ", ".join(to_source(p, names) for p in polys)
    src = f"def {fname}({', '.join(arg_names)}):\n    return ({body}{',' if len(polys) == 1 else ''})\n"
    ns: dict = {"_F": Fraction}
    exec(compile(src, f"<nilcalc:{fname}>", "exec"), ns)
    fn = ns[fname]
    fn.__source__ = src
    return fn


def lagrange(values: Sequence, t):
    """Interpolate the polynomial through (k, values[k]) and evaluate at t.

    ``values`` entries and ``t`` may be rationals or Polys.
    """
    n = len(values)
    total = 0
    for k in range(n):
        if _is_zero(values[k]):
            continue
        basis = 1
        denom = 1
        for j in range(n):
            if j != k:
                basis = basis * (t - j)
                denom *= k - j
        total = total + values[k] * basis * Fraction(1, denom)
    return total


def _is_zero(x) -> bool:
    if isinstance(x, Poly):
        return not x.terms
    return x == 0
