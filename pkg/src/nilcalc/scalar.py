"""Exact rational scalars, torus points and small complex vectors.

Every frequency in the package is a :class:`fractions.Fraction`.  Phases
``e(x) = exp(2 pi i x)`` are carried exactly as a torus point together with a
float amplitude, so products of unimodular entries never accumulate rounding
error until something is rendered as a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

RationalLike = Union[int, Fraction, str]


def as_rational(x: RationalLike) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected on purpose: they would silently smuggle binary
    rounding into exact computations.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def format_rational(x: Fraction) -> str:
    """Serialize as ``"p/q"`` (integers keep the ``/1``-free form ``"p"``)."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def signed_frac(x: RationalLike) -> Fraction:
    """The representative of ``x`` mod 1 in ``(-1/2, 1/2]``."""
    x = as_rational(x)
    # ceil(x - 1/2) is the nearest integer, rounding half down
    k = -((-(2 * x.numerator - x.denominator)) // (2 * x.denominator))
    return x - k


def nearest_int(x: RationalLike) -> int:
    """Integer k with ``x - k == signed_frac(x)``."""
    x = as_rational(x)
    return int(x - signed_frac(x))


@dataclass(frozen=True)
class TorusPoint:
    """A point of R/Z stored by its canonical representative in (-1/2, 1/2]."""

    value: Fraction

    def __init__(self, value: RationalLike = 0):
        object.__setattr__(self, "value", signed_frac(value))

    def __add__(self, other: "TorusPoint | RationalLike") -> "TorusPoint":
        return TorusPoint(self.value + _tval(other))

    __radd__ = __add__

    def __sub__(self, other: "TorusPoint | RationalLike") -> "TorusPoint":
        return TorusPoint(self.value - _tval(other))

    def __rsub__(self, other: RationalLike) -> "TorusPoint":
        return TorusPoint(_tval(other) - self.value)

    def __neg__(self) -> "TorusPoint":
        return TorusPoint(-self.value)

    def __mul__(self, k: int) -> "TorusPoint":
        if not isinstance(k, int):
            raise TypeError("torus points can only be scaled by integers")
        return TorusPoint(self.value * k)

    __rmul__ = __mul__

    def __str__(self) -> str:
        return format_rational(self.value)


def _tval(x: "TorusPoint | RationalLike") -> Fraction:
    return x.value if isinstance(x, TorusPoint) else as_rational(x)


def torus_dist(x: "TorusPoint | RationalLike", y: "TorusPoint | RationalLike") -> Fraction:
    """Distance on R/Z, a rational in [0, 1/2]."""
    return abs(signed_frac(_tval(x) - _tval(y)))


def torus_norm(x: "TorusPoint | RationalLike") -> Fraction:
    return abs(signed_frac(_tval(x)))


@dataclass(frozen=True)
class PhaseVector:
    """A vector in C^D whose entries are amplitude * e(phase).

    Amplitudes are floats (or exact 1 for unimodular entries) and phases are
    exact canonical torus representatives.  An entry with amplitude 0 always
    carries phase 0 so that equality is structural.
    """

    amps: tuple
    phases: tuple

    def __post_init__(self):
        if len(self.amps) != len(self.phases) or not self.amps:
            raise ValueError("amplitude and phase lists must be nonempty and equal length")
        amps, phases = [], []
        for a, p in zip(self.amps, self.phases):
            a = float(a)
            if a < 0:
                a, p = -a, as_rational(p) + Fraction(1, 2)
            if a == 0.0:
                p = 0
            amps.append(a)
            phases.append(signed_frac(p))
        object.__setattr__(self, "amps", tuple(amps))
        object.__setattr__(self, "phases", tuple(phases))

    @classmethod
    def unit(cls, phases: Iterable[RationalLike]) -> "PhaseVector":
        phases = list(phases)
        return cls(tuple(1.0 for _ in phases), tuple(phases))

    @property
    def dim(self) -> int:
        return len(self.amps)

    @property
    def unimodular(self) -> bool:
        return all(a == 1.0 for a in self.amps)

    def conj(self) -> "PhaseVector":
        return PhaseVector(self.amps, tuple(-p for p in self.phases))

    def scale_phase(self, t: RationalLike) -> "PhaseVector":
        """Multiply every entry by e(t)."""
        t = as_rational(t)
        return PhaseVector(self.amps, tuple(p + t for p in self.phases))

    def to_complex(self) -> np.ndarray:
        out = np.empty(self.dim, dtype=complex)
        for i, (a, p) in enumerate(zip(self.amps, self.phases)):
            out[i] = a * _expi(p)
        return out

    def norm(self) -> float:
        return math.sqrt(math.fsum(a * a for a in self.amps))

    def __len__(self) -> int:
        return self.dim


def _expi(p: Fraction) -> complex:
    # exact special values keep e(1/4) == 1j instead of 6e-17 + 1j
    q = p.denominator
    if q == 1:
        return 1.0 + 0j
    if q == 2:
        return -1.0 + 0j
    if q == 4:
        return 1j if p.numerator == 1 else -1j
    theta = 2.0 * math.pi * float(p)
    return complex(math.cos(theta), math.sin(theta))


def expi(x: "TorusPoint | RationalLike") -> complex:
    """e(x) as a Python complex, reducing x mod 1 exactly first."""
    return _expi(signed_frac(_tval(x)))


def phase(x: "TorusPoint | RationalLike") -> PhaseVector:
    """The one-dimensional unimodular vector e(x)."""
    return PhaseVector.unit([_tval(x)])


def tensor(u: PhaseVector, v: PhaseVector) -> PhaseVector:
    """Row-major Kronecker product; entry (i, j) is u_i * v_j."""
    amps = tuple(a * b for a in u.amps for b in v.amps)
    phases = tuple(p + q for p in u.phases for q in v.phases)
    return PhaseVector(amps, phases)


def conj(v: PhaseVector) -> PhaseVector:
    return v.conj()


def tensor_all(vs: Sequence[PhaseVector]) -> PhaseVector:
    out = vs[0]
    for v in vs[1:]:
        out = tensor(out, v)
    return out
