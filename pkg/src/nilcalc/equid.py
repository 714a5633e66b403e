"""Equidistribution tests for polynomial orbits.

Three tools:

* ``weyl_sum`` averages a phase along [N];
* ``leibman_test`` searches for a horizontal character that makes the orbit
  slowly varying, which obstructs equidistribution;
* ``empirical_distribution_test`` measures character averages along the orbit
  and compares them with their Haar value, which is 0.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ._report import Report
from .nilgroup import HorizontalChar, NilSchema, index_sort_key, reduce_mod_lattice
from .polyseq import PolySeq, gen_binom
from .scalar import RationalLike, as_rational, expi, torus_norm

MAX_GENERATORS = 6

NO_OBSTRUCTION = "no-obstruction-found"
OBSTRUCTION = "obstruction"


def _mean_abs(phases: Sequence[Fraction]) -> float:
    if not phases:
        return 0.0
    z = np.array([expi(p) for p in phases])
    return float(abs(np.mean(z)))


def weyl_sum(f_spec, N: int) -> float:
    """|E_{n in [N]} e(phi(n))|.

    ``f_spec`` is either a coefficient sequence c_0, c_1, ... of a phase
    polynomial in n, a callable n -> rational, or a pair (orbit, character)
    for which phi(n) = xi(g(n)).
    """
    if isinstance(f_spec, tuple) and len(f_spec) == 2 and isinstance(f_spec[0], PolySeq):
        g, xi = f_spec
        coeffs = character_polynomial(g, xi)
        phi = lambda n: eval_binomial(coeffs, n)  # noqa: E731
    elif callable(f_spec):
        phi = lambda n: as_rational(f_spec(n))  # noqa: E731
    else:
        cs = [as_rational(c) for c in f_spec]
        phi = lambda n: sum((c * n ** i for i, c in enumerate(cs)), Fraction(0))  # noqa: E731
    return _mean_abs([phi(n) for n in range(1, N + 1)])


def geometric_weyl(theta: RationalLike, N: int) -> float:
    """Closed form of |E_{n in [N]} e(theta n)|."""
    from .gowers import geometric_mean_abs

    return geometric_mean_abs(theta, N)


# --------------------------------------------------------------------------
# characters along orbits


def _one_dim(g: PolySeq) -> None:
    if g.k != 1:
        raise ValueError("equidistribution tests need a one-dimensional domain")


def character_polynomial(g: PolySeq, xi: HorizontalChar) -> List[Fraction]:
    """Coefficients c_j with xi(g(n)) = sum_j c_j binom(n, j) exactly.

    Horizontal coordinates add under multiplication, so xi applied to the
    Taylor form is a polynomial in the binomial basis.
    """
    _one_dim(g)
    deg = max(j[0] for j in g.J)
    cs = [Fraction(0)] * (deg + 1)
    for j, gj in g.coeffs:
        cs[j[0]] += xi.value(gj)
    return cs


def eval_binomial(coeffs: Sequence[Fraction], n: int) -> Fraction:
    return sum((c * gen_binom(n, j) for j, c in enumerate(coeffs) if c), Fraction(0))


def smoothness(coeffs: Sequence[Fraction], N: int, stop_above: Optional[Fraction] = None) -> Fraction:
    """max_{1 <= n < N} ||phi(n+1) - phi(n)|| for phi in the binomial basis.

    The increment is again a binomial polynomial with the coefficients shifted
    down by one.  With ``stop_above`` set, returns as soon as the running
    maximum exceeds it.
    """
    inc = list(coeffs[1:]) or [Fraction(0)]
    best = Fraction(0)
    for n in range(1, N):
        d = torus_norm(eval_binomial(inc, n))
        if d > best:
            best = d
            if stop_above is not None and best > stop_above:
                return best
    return best


def height_ordered(m: int, H: int) -> Iterator[Tuple[int, ...]]:
    """Nonzero vectors in [-H, H]^m, one per sign pair, by sup-norm then lex.

    The first nonzero entry is positive: xi and -xi have identical smoothness.
    """
    for h in range(1, H + 1):
        for v in itertools.product(range(-h, h + 1), repeat=m):
            if max(abs(c) for c in v) != h:
                continue
            first = next(c for c in v if c)
            if first > 0:
                yield v


@dataclass
class ObstructionReport:
    verdict: str
    witness: Optional[HorizontalChar]
    smoothness: Optional[Fraction]
    height: int
    C: Fraction
    N: int
    searched: int = 0

    @property
    def obstructed(self) -> bool:
        return self.verdict == OBSTRUCTION

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": list(self.witness.coeffs) if self.witness else None,
            "smoothness": self.smoothness,
            "height": self.height,
            "C": self.C,
            "N": self.N,
            "searched": self.searched,
        }


def leibman_test(g: PolySeq, N: int, H: int = 10, C: RationalLike = 1) -> ObstructionReport:
    """Exhaustive search for xi with max single-step increment of xi o g <= C/N."""
    _one_dim(g)
    s = g.schema
    m = len(s.horizontal_positions)
    if m > MAX_GENERATORS:
        raise ValueError(f"{m} horizontal generators exceed the enumeration cap of {MAX_GENERATORS}")
    C = as_rational(C)
    bound = C / N
    # per-position binomial coefficient vectors; xi o g is their integer combination
    deg = max(j[0] for j in g.J)
    basis = [[Fraction(0)] * (deg + 1) for _ in range(m)]
    for j, gj in g.coeffs:
        for a, p in enumerate(s.horizontal_positions):
            basis[a][j[0]] += gj.coords[p]
    searched = 0
    for v in height_ordered(m, H):
        searched += 1
        coeffs = [sum((k * basis[a][i] for a, k in enumerate(v)), Fraction(0)) for i in range(deg + 1)]
        sm = smoothness(coeffs, N, stop_above=bound)
        if sm <= bound:
            return ObstructionReport(OBSTRUCTION, HorizontalChar(s, v), sm, H, C, N, searched)
    return ObstructionReport(NO_OBSTRUCTION, None, None, H, C, N, searched)


# --------------------------------------------------------------------------
# empirical distribution


def vertical_positions(s: NilSchema) -> Tuple[int, ...]:
    """Coordinates of the last nontrivial filtration group that are not horizontal."""
    kind = s.filtration_kind
    top = max((k for k, v in s.filtration.items() if v), key=lambda k: index_sort_key(kind, k))
    return tuple(sorted(set(s.filtration[top]) - set(s.horizontal_positions)))


def empirical_distribution_test(
    g: PolySeq,
    N: int,
    char_height: int = 3,
    threshold: Optional[float] = None,
    window: Optional[int] = None,
) -> Report:
    """Largest |average| over [1, window or N] of a nontrivial character.

    Horizontal characters are xi(g(n)); vertical characters are
    e(k . z(n)) with z the vertical coordinates of the fundamental-domain
    representative of g(n) Gamma.  Both have Haar integral 0.
    """
    _one_dim(g)
    s = g.schema
    L = N if window is None else min(window, N)
    hpos = s.horizontal_positions
    vpos = vertical_positions(s)
    pts = [reduce_mod_lattice(g(n))[0].coords for n in range(1, L + 1)]
    worst, worst_char = 0.0, None
    for kind, pos in (("horizontal", hpos), ("vertical", vpos)):
        if not pos:
            continue
        for v in height_ordered(len(pos), char_height):
            phases = [sum((k * x[p] for k, p in zip(v, pos)), Fraction(0)) for x in pts]
            a = _mean_abs(phases)
            if a > worst + 1e-15:
                worst, worst_char = a, {"kind": kind, "positions": list(pos), "coeffs": list(v)}
    data = {"N": N, "window": L, "char_height": char_height, "max_average": worst, "character": worst_char}
    if threshold is None:
        return Report.passed("empirical-distribution", **data)
    if worst <= threshold:
        return Report.passed("empirical-distribution", threshold=threshold, **data)
    return Report.failed("empirical-distribution", "discrepancy above threshold", worst_char,
                         threshold=threshold, **data)


# --------------------------------------------------------------------------
# frequencies


def generic_frequency(rng: random.Random, N: int, degree: int = 1, Q0: int = 16) -> Fraction:
    """A rational with denominator > N^(degree+1) that stays away from small rationals.

    Rejection sampling until ||q alpha|| > Q0 / N for every 1 <= q <= Q0.
    """
    lo = N ** (degree + 1)
    while True:
        den = rng.randint(lo + 1, 2 * lo)
        a = Fraction(rng.randint(1, den - 1), den)
        if a.denominator <= lo:
            continue
        if all(torus_norm(q * a) > Fraction(Q0, N) for q in range(1, Q0 + 1)):
            return a


def torus_orbit(coeff_rows: Sequence[Sequence[RationalLike]]) -> PolySeq:
    """Orbit on torus(k, d) whose i-th coordinate is sum_j c_ij n^j."""
    from .nilgroup import torus
    from .polyseq import from_function

    rows = [[as_rational(c) for c in r] for r in coeff_rows]
    k = len(rows)
    d = max(1, max(len(r) for r in rows) - 1)
    s = torus(k, d)
    return from_function(s, lambda n: s.element([sum(c * n ** j for j, c in enumerate(r)) for r in rows]))
