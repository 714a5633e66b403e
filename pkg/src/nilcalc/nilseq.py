"""Nilsequences and vector-valued nilcharacters.

A nilcharacter here is ``chi(n) = F(g(n) Gamma)`` where F has a vertical
frequency eta on the top filtration piece: on every chart k of a smoothing
atlas over the remaining ("base") coordinates,

    F_k(x) = phi_k(base(x_k)) * e(eta(vertical(x_k)))

with x_k the lattice representative whose base coordinates sit in the box
around the chart centre.  The weights satisfy ``sum phi_k^2 = 1`` so every
evaluation is a unit vector.  An unsmoothed single chart reproduces the
piecewise bracket formulas exactly, and flags points too close to the edge of
the fundamental domain.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

from ._report import Report
from .nilgroup import (
    GroupElement,
    NilSchema,
    SchemaError,
    VerticalChar,
    heisenberg,
    heisenberg_degrank32,
    appC_multidegree,
    product,
    reduce_mod_lattice,
)
from .polyseq import PolySeq, eval_poly
from .scalar import PhaseVector, RationalLike, TorusPoint, as_rational, format_rational, signed_frac, torus_dist

BOUNDARY_TOL = Fraction(1, 10**6)
DEFAULT_RADIUS = Fraction(1, 10)


class CoverageError(RuntimeError):
    pass


def bump(t: float) -> float:
    """cos^2(pi t / 2) on [-1, 1], zero outside."""
    if abs(t) >= 1.0:
        return 0.0
    return math.cos(math.pi * t / 2.0) ** 2


@dataclass(frozen=True)
class SmoothingAtlas:
    """Charts over the base coordinates ``base`` (schema positions).

    ``radius=None`` is the unsmoothed single chart centred at 0.
    """

    base: Tuple[int, ...]
    centers: Tuple[Tuple[Fraction, ...], ...]
    radius: Optional[Fraction]

    @classmethod
    def grid(cls, base: Sequence[int], radius: RationalLike = DEFAULT_RADIUS) -> "SmoothingAtlas":
        """Centres on the lattice (1/M)Z^h with the coarsest M covering the torus."""
        radius = as_rational(radius)
        if radius <= 0 or radius > Fraction(1, 8):
            raise ValueError("chart radius must lie in (0, 1/8]")
        h = len(base)
        M = 1
        # every point is within sqrt(h)/(2M) of the nearest grid point
        while math.sqrt(h) / (2 * M) >= float(radius):
            M += 1
        ticks = [signed_frac(Fraction(a, M)) for a in range(M)]
        centers = tuple(itertools.product(ticks, repeat=h))
        return cls(tuple(base), centers, radius)

    @classmethod
    def unsmoothed(cls, base: Sequence[int]) -> "SmoothingAtlas":
        return cls(tuple(base), (tuple(Fraction(0) for _ in base),), None)

    @property
    def size(self) -> int:
        return len(self.centers)

    @property
    def smoothed(self) -> bool:
        return self.radius is not None

    def weights(self, u: Sequence[Fraction]) -> List[Tuple[int, float]]:
        """Nonzero (chart, phi_k) pairs at base point u (torus coordinates)."""
        if not self.smoothed:
            return [(0, 1.0)]
        r = float(self.radius)
        raw = []
        for k, c in enumerate(self.centers):
            d2 = 0.0
            for a, b in zip(u, c):
                d = float(torus_dist(a, b))
                d2 += d * d
                if d2 >= r * r:
                    break
            if d2 < r * r:
                raw.append((k, bump(math.sqrt(d2) / r)))
        total = math.sqrt(math.fsum(b * b for _, b in raw))
        if total == 0.0:
            raise CoverageError(f"no chart covers the base point {tuple(map(str, u))}")
        return [(k, b / total) for k, b in raw if b > 0.0]


def verify_atlas(atlas: SmoothingAtlas, samples: int = 10_000, seed: int = 0) -> Report:
    """Coverage on a mesh of spacing r/4 and unit total weight at random points."""
    if not atlas.smoothed:
        return Report.passed("atlas", charts=1)
    h = len(atlas.base)
    steps = int(math.ceil(1 / (atlas.radius / 4)))
    if steps ** h <= 200_000:
        mesh = itertools.product([signed_frac(Fraction(a, steps)) for a in range(steps)], repeat=h)
        for u in mesh:
            try:
                atlas.weights(u)
            except CoverageError:
                return Report.failed("atlas", "coverage-gap", u)
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(samples):
        u = [signed_frac(Fraction(rng.randrange(10**6), 10**6)) for _ in range(h)]
        try:
            w = atlas.weights(u)
        except CoverageError:
            return Report.failed("atlas", "coverage-gap", tuple(u))
        worst = max(worst, abs(math.fsum(p * p for _, p in w) - 1.0))
    if worst > 1e-12:
        return Report.failed("atlas", "weights-not-normalized", worst)
    return Report.passed("atlas", charts=atlas.size, max_weight_error=worst)


@dataclass(frozen=True)
class NilcharSpec:
    schema: NilSchema
    orbit: PolySeq
    vertical: VerticalChar
    atlases: Tuple[SmoothingAtlas, ...]

    def __post_init__(self):
        vert = self.schema.positions(self.vertical.index)
        covered = set()
        for a in self.atlases:
            covered.update(a.base)
        if covered & vert:
            raise SchemaError("atlas base coordinates overlap the vertical subgroup")
        if covered | vert != set(range(self.schema.dim)):
            raise SchemaError("atlas base plus vertical positions must cover every coordinate")

    @property
    def dim(self) -> int:
        out = 1
        for a in self.atlases:
            out *= a.size
        return out

    @property
    def unsmoothed(self) -> bool:
        return all(not a.smoothed for a in self.atlases)


def make_spec(
    orbit: PolySeq,
    vertical: VerticalChar,
    smoothed: bool = True,
    radius: RationalLike = DEFAULT_RADIUS,
) -> NilcharSpec:
    s = orbit.schema
    vert = s.positions(vertical.index)
    base = tuple(p for p in range(s.dim) if p not in vert)
    atlas = SmoothingAtlas.grid(base, radius) if smoothed else SmoothingAtlas.unsmoothed(base)
    return NilcharSpec(s, orbit, vertical, (atlas,))


def _near_boundary(u: Fraction) -> bool:
    return torus_dist(u, Fraction(1, 2)) <= BOUNDARY_TOL


def eval_at(spec: NilcharSpec, x: GroupElement) -> Tuple[PhaseVector, bool]:
    """F(x Gamma) together with the boundary flag of unsmoothed charts."""
    s = spec.schema
    x0, _ = reduce_mod_lattice(x)
    flagged = False
    per_factor = []
    for atlas in spec.atlases:
        u = [x0.coords[p] for p in atlas.base]
        if not atlas.smoothed and any(_near_boundary(v) for v in u):
            flagged = True
        per_factor.append(atlas.weights(u))
    sizes = [a.size for a in spec.atlases]
    amps = [0.0] * spec.dim
    phases: List[Fraction] = [Fraction(0)] * spec.dim
    for combo in itertools.product(*per_factor):
        center = [Fraction(0)] * s.dim
        flat = 0
        amp = 1.0
        for atlas, size, (k, w) in zip(spec.atlases, sizes, combo):
            flat = flat * size + k
            amp *= w
            for p, c in zip(atlas.base, atlas.centers[k]):
                center[p] = c
        rep = x0 if not any(center) else reduce_mod_lattice(x, center=center)[0]
        amps[flat] = amp
        phases[flat] = spec.vertical.value(rep)
    return PhaseVector(tuple(amps), tuple(phases)), flagged


def eval_nilchar(spec: NilcharSpec, n) -> PhaseVector:
    return eval_at(spec, eval_poly(spec.orbit, n))[0]


def eval_nilchar_flagged(spec: NilcharSpec, n) -> Tuple[PhaseVector, bool]:
    return eval_at(spec, eval_poly(spec.orbit, n))


def verify_equivariance(
    spec: NilcharSpec,
    trials: int = 100,
    seed: int = 0,
    eta: Optional[VerticalChar] = None,
    shifts: Optional[Sequence[GroupElement]] = None,
) -> Report:
    """Compare F(g_d x) with e(eta(g_d)) F(x) for random central g_d and x.

    ``eta`` defaults to the vertical character of ``spec``; passing another one
    tests a claimed frequency.  Phases are compared exactly, weights exactly as
    floats; the maximum complex discrepancy is reported.
    """
    s = spec.schema
    eta = spec.vertical if eta is None else eta
    vert = sorted(s.positions(spec.vertical.index))
    rng = random.Random(seed)
    worst = 0.0
    exact = True
    witness = None
    for t in range(trials):
        if shifts is not None:
            gd = shifts[t % len(shifts)]
        else:
            gd = s.word({p: Fraction(rng.randint(-30, 30), rng.randint(1, 12)) for p in vert})
        x = s.element([Fraction(rng.randint(-500, 500), rng.randint(1, 97)) for _ in range(s.dim)])
        lhs, _ = eval_at(spec, s.mul(gd, x))
        rhs, _ = eval_at(spec, x)
        rhs = rhs.scale_phase(eta.value(gd))
        if lhs != rhs:
            exact = False
            d = max(abs(a - b) for a, b in zip(lhs.to_complex(), rhs.to_complex()))
            if d > worst:
                worst, witness = d, (gd, x)
    if exact:
        return Report.passed("equivariance", trials=trials, max_discrepancy=0.0)
    return Report.failed("equivariance", "vertical-frequency-mismatch", witness, max_discrepancy=worst)


# --------------------------------------------------------------------------
# serialization


def spec_to_dict(spec: NilcharSpec) -> dict:
    """Schema + orbit + vertical coefficients + atlases, rationals as "p/q"."""
    from .nilgroup import format_index, schema_to_dict
    from .polyseq import polyseq_to_dict

    kind = spec.schema.filtration_kind
    return {
        "schema": schema_to_dict(spec.schema),
        "orbit": polyseq_to_dict(spec.orbit),
        "vertical": {"index": format_index(kind, spec.vertical.index),
                     "coeffs": [[p, k] for p, k in spec.vertical.coeffs]},
        "atlases": [
            {"base": list(a.base),
             "centers": [[format_rational(c) for c in ctr] for ctr in a.centers],
             "radius": None if a.radius is None else format_rational(a.radius)}
            for a in spec.atlases
        ],
    }


def spec_from_dict(doc) -> NilcharSpec:
    from .nilgroup import parse_index, schema_from_dict
    from .polyseq import polyseq_from_dict

    s = schema_from_dict(doc["schema"])
    orbit = polyseq_from_dict(doc["orbit"], s)
    v = doc["vertical"]
    vertical = VerticalChar.on(s, parse_index(s.filtration_kind, v["index"]), {int(p): int(k) for p, k in v["coeffs"]})
    atlases = tuple(
        SmoothingAtlas(tuple(a["base"]), tuple(tuple(as_rational(c) for c in ctr) for ctr in a["centers"]),
                       None if a["radius"] is None else as_rational(a["radius"]))
        for a in doc["atlases"]
    )
    return NilcharSpec(s, orbit, vertical, atlases)


# --------------------------------------------------------------------------
# standard specs


def heisenberg_orbit(alpha: RationalLike, beta: RationalLike) -> PolySeq:
    """n -> e2^{beta n} e1^{alpha n} in Taylor form."""
    a, b = as_rational(alpha), as_rational(beta)
    h = heisenberg()
    return PolySeq(h, {1: h.element([a, b, -a * b]), 2: h.element([0, 0, -a * b])})


def heisenberg_spec(alpha, beta, smoothed: bool = False, eta: int = -1,
                    radius: RationalLike = DEFAULT_RADIUS) -> NilcharSpec:
    """Bracket nilcharacter on the Heisenberg nilmanifold.

    With eta = -1 and no smoothing, the value at n is e({alpha n} beta n).
    """
    h = heisenberg()
    vertical = VerticalChar.on(h, 2, {2: eta})
    return make_spec(heisenberg_orbit(alpha, beta), vertical, smoothed, radius)


def degrank32_orbit(alpha: RationalLike, beta: RationalLike) -> PolySeq:
    """n -> e2^{beta n} e1^{alpha n^2} on the degree-rank (3,2) Heisenberg group."""
    a, b = as_rational(alpha), as_rational(beta)
    from .polyseq import from_function

    s = heisenberg_degrank32()
    e1, e2 = s.basis_element(0), s.basis_element(1)
    return from_function(s, lambda n: s.mul(s.power(e2, b * n), s.power(e1, a * n * n)))


def degrank32_spec(alpha, beta, smoothed: bool = False, eta: int = -1) -> NilcharSpec:
    s = heisenberg_degrank32()
    vertical = VerticalChar.on(s, (3, 2), {2: eta})
    return make_spec(degrank32_orbit(alpha, beta), vertical, smoothed)


def appC_orbit(alpha: RationalLike, beta: RationalLike) -> PolySeq:
    """(n1, n2) -> a1^{alpha n1} a2^{beta n1} b1^{alpha n2} b2^{beta n2} c12^{-alpha beta n1 n2}."""
    from .polyseq import from_function

    a, b = as_rational(alpha), as_rational(beta)
    s = appC_multidegree()

    def g(n):
        n1, n2 = n
        return s.element([a * n1, b * n1, 0, a * n2, b * n2, 0, -a * b * n1 * n2])

    return from_function(s, g, k=2)


def appC_spec(alpha, beta) -> NilcharSpec:
    s = appC_multidegree()
    vertical = VerticalChar.on(s, (1, 1), {6: -1})
    return make_spec(appC_orbit(alpha, beta), vertical, smoothed=False)


def product_spec(s1: NilcharSpec, s2: NilcharSpec) -> NilcharSpec:
    """Nilcharacter of (g1(n), g2(n)) on the product nilmanifold with eta1 + eta2."""
    if s1.orbit.k != s2.orbit.k:
        raise SchemaError("orbits must share the domain dimension")
    if s1.vertical.index != s2.vertical.index:
        raise SchemaError("vertical characters must live on the same filtration index")
    P = product(s1.schema, s2.schema)
    off = s1.schema.dim
    slots = set(s1.orbit.J) | set(s2.orbit.J)
    coeffs = {}
    for j in slots:
        coeffs[j] = P.element(s1.orbit.coeff(j).coords + s2.orbit.coeff(j).coords)
    orbit = PolySeq(P, coeffs, k=s1.orbit.k, check=False)
    vcoeffs = dict(s1.vertical.coeffs)
    vcoeffs.update({p + off: k for p, k in s2.vertical.coeffs})
    vertical = VerticalChar.on(P, s1.vertical.index, vcoeffs)
    atlases = tuple(s1.atlases) + tuple(
        SmoothingAtlas(tuple(p + off for p in a.base), a.centers, a.radius) for a in s2.atlases
    )
    return NilcharSpec(P, orbit, vertical, atlases)


# --------------------------------------------------------------------------
# skew-torus lift of a quadratic phase


def linear_lift_orbit(alpha: RationalLike, beta: RationalLike, gamma: RationalLike, n_max: int,
                      side: str = "left") -> Iterator[TorusPoint]:
    """Values of :func:`linear_lift_eval` for n = 0, 1, ..., n_max in one pass."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    h = heisenberg()
    a, b, c = (as_rational(v) for v in (alpha, beta, gamma))
    g = h.element([a, 1, b])
    y = h.element([0, 0, c])
    for n in range(n_max + 1):
        if n:
            if side == "left":
                y = reduce_mod_lattice(h.mul(y, g), side="left")[0]
            else:
                y = reduce_mod_lattice(h.mul(g, y), side="right")[0]
        if y.coords[1] != 0:
            raise AssertionError("orbit left the skew torus")
        yield TorusPoint(y.coords[2])


def linear_lift_eval(alpha: RationalLike, beta: RationalLike, gamma: RationalLike, n: int,
                     side: str = "left") -> TorusPoint:
    """Iterate g~ = g1^alpha g2 [g1,g2]^beta from x~ = [g1,g2]^gamma n times.

    ``side="left"`` iterates y -> y g~ on Gamma\\G (lattice reduced on the
    left) and reproduces n(n+1)/2 alpha + n beta + gamma.  ``side="right"``
    iterates y -> g~ y on G/Gamma, which in these coordinates gives
    n beta - n(n-1)/2 alpha + gamma.  The value read off is the [g1,g2]
    coordinate of the point of the skew torus {g1^t1 [g1,g2]^t12}.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = None
    for out in linear_lift_orbit(alpha, beta, gamma, n, side):
        pass
    return out


def linear_lift_closed_form(alpha, beta, gamma, n: int, side: str = "left") -> TorusPoint:
    a, b, c = (as_rational(v) for v in (alpha, beta, gamma))
    if side == "left":
        return TorusPoint(Fraction(n * (n + 1), 2) * a + n * b + c)
    return TorusPoint(n * b - Fraction(n * (n - 1), 2) * a + c)
