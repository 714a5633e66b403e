"""Filtered nilpotent Lie groups in Mal'cev coordinates of the second kind.

A schema fixes an ordered basis e_1..e_m together with the normal form of
every basis commutator ``[e_i, e_j] = e_i^{-1} e_j^{-1} e_i e_j`` (supported on
positions after ``max(i, j)``).  From that table the group law is derived once,
symbolically: multiplication and real powers become polynomial maps with
rational coefficients, which are compiled to plain Python functions.  All
numeric work afterwards is exact Fraction arithmetic.

The lattice is always the integer-coordinate subgroup.
"""

from __future__ import annotations

import functools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from . import _poly
from ._poly import Poly
from ._report import Report
from .scalar import as_rational, format_rational, nearest_int, RationalLike, TorusPoint

MAX_CLASS = 4
DEGREE, MULTIDEGREE, DEGREE_RANK = "degree", "multidegree", "degree-rank"
FILTRATION_KINDS = (DEGREE, MULTIDEGREE, DEGREE_RANK)

Index = Union[int, Tuple[int, ...]]
Word = Dict[int, Fraction]


class SchemaError(ValueError):
    pass


# --------------------------------------------------------------------------
# filtration indices


def normalize_index(kind: str, index) -> Index:
    if isinstance(index, FiltIndex):
        if index.kind != kind:
            raise SchemaError(f"index of kind {index.kind} used on a {kind} filtration")
        index = index.value
    if kind == DEGREE:
        if not isinstance(index, int) or index < 0:
            raise SchemaError(f"bad degree index {index!r}")
        return index
    index = tuple(int(v) for v in index)
    if any(v < 0 for v in index):
        raise SchemaError(f"negative filtration index {index!r}")
    if kind == DEGREE_RANK:
        if len(index) != 2:
            raise SchemaError(f"degree-rank index must be a pair, got {index!r}")
        d, r = index
        if r > d:
            return (d + 1, 0)
    return index


def index_add(kind: str, a: Index, b: Index) -> Index:
    if kind == DEGREE:
        return a + b
    return normalize_index(kind, tuple(x + y for x, y in zip(a, b)))


def index_leq(kind: str, a: Index, b: Index) -> bool:
    if kind == MULTIDEGREE:
        return all(x <= y for x, y in zip(a, b))
    return a <= b


def index_sort_key(kind: str, a: Index):
    """Total order used for iteration: graded then lexicographic."""
    if kind == MULTIDEGREE:
        return (sum(a), a)
    return a


@dataclass(frozen=True)
class FiltIndex:
    kind: str
    value: Index

    def __post_init__(self):
        object.__setattr__(self, "value", normalize_index(self.kind, self.value))

    def __add__(self, other: "FiltIndex") -> "FiltIndex":
        if other.kind != self.kind:
            raise SchemaError("cannot add indices of different kinds")
        return FiltIndex(self.kind, index_add(self.kind, self.value, other.value))

    def __le__(self, other: "FiltIndex") -> bool:
        return index_leq(self.kind, self.value, other.value)

    def __lt__(self, other: "FiltIndex") -> bool:
        return self != other and self <= other


def format_index(kind: str, index: Index) -> str:
    if kind == DEGREE:
        return str(index)
    return ",".join(str(v) for v in index)


def parse_index(kind: str, text: str) -> Index:
    if kind == DEGREE:
        return int(text)
    return normalize_index(kind, tuple(int(v) for v in text.split(",")))


# --------------------------------------------------------------------------
# deriving the group law


def _weights(m: int, table: Mapping[Tuple[int, int], Word]) -> List[int]:
    w = [1] * m
    for (i, j), word in sorted(table.items(), key=lambda kv: max(kv[0])):
        for q in word:
            w[q] = max(w[q], w[i] + w[j])
    # a second sweep settles chains listed out of order
    for _ in range(m):
        changed = False
        for (i, j), word in table.items():
            for q in word:
                if w[q] < w[i] + w[j]:
                    w[q] = w[i] + w[j]
                    changed = True
        if not changed:
            break
    return w


def _unit(length: int, k: int, t=1) -> tuple:
    v = [Fraction(0)] * length
    v[k] = Fraction(t)
    return tuple(v)


def _poly_eq(a, b) -> bool:
    a = a if isinstance(a, Poly) else Poly.const(a)
    b = b if isinstance(b, Poly) else Poly.const(b)
    return a == b


class _Law:
    """Compiled multiplication and power maps for one schema."""

    def __init__(self, m: int, table: Mapping[Tuple[int, int], Word]):
        self.m = m
        weights = _weights(m, table)
        bound = max(weights)
        for extra in range(0, m + 2):
            try:
                self._derive(table, bound + extra)
                self.degree_bound = bound + extra
                return
            except _InterpolationMiss:
                continue
        raise SchemaError("could not derive a polynomial group law from the table")

    def _derive(self, table, D: int) -> None:
        m = self.m
        mul_t = pow_t = None
        for p in reversed(range(m)):
            L = m - p

            def names(v, L=L):
                if v < L:
                    return f"x[{v}]"
                if v < 2 * L:
                    return f"y[{v - L}]"
                return "s"

            X = [Poly.var(i) for i in range(L)]
            Y = [Poly.var(L + i) for i in range(L)]
            S = Poly.var(2 * L)
            if L == 1:
                mul_sym = [X[0] + Y[0]]
            else:
                conj = self._conjugation(p, L - 1, table, mul_t, pow_t, D)
                if conj is None:
                    tail = mul_t(tuple(X[1:]), tuple(Y[1:]))
                else:
                    y0 = Y[0]
                    acc = None
                    for q in range(L - 1):
                        img = tuple(_poly.lagrange(vals, y0) for vals in conj[q])
                        factor = pow_t(img, X[1 + q])
                        acc = factor if acc is None else mul_t(acc, factor)
                    tail = mul_t(acc, tuple(Y[1:]))
                mul_sym = [X[0] + Y[0]] + list(tail)
            mul_p = _poly.compile_vector(["x", "y"], mul_sym, names, "mul")

            # integer powers of a symbolic element, then interpolate in s
            powers = [tuple(Fraction(0) for _ in range(L)), tuple(X)]
            for _ in range(2, D + 2):
                powers.append(mul_p(powers[-1], tuple(X)))
            pow_sym = []
            for c in range(L):
                vals = [powers[n][c] for n in range(D + 1)]
                pow_sym.append(_poly.lagrange(vals, S))
                if not _poly_eq(_poly.lagrange(vals, D + 1), powers[D + 1][c]):
                    raise _InterpolationMiss()
            pow_p = _poly.compile_vector(["x", "s"], pow_sym, names, "power")
            mul_t, pow_t = mul_p, pow_p
        self.mul = mul_t
        self.pow = pow_t

    @staticmethod
    def _conjugation(p, Lt, table, mul_t, pow_t, D):
        """Coordinates of e_p^{-n} e_q e_p^{n} for n = 0..D, per tail position q.

        Returns None when e_p commutes with everything after it.
        """
        c1 = []
        trivial = True
        for q in range(Lt):
            eq = _unit(Lt, q)
            word = table.get((p, p + 1 + q))
            if not word:
                c1.append(eq)
                continue
            trivial = False
            w = [Fraction(0)] * Lt
            for pos, t in word.items():
                w[pos - p - 1] = Fraction(t)
            c1.append(mul_t(eq, pow_t(tuple(w), -1)))
        if trivial:
            return None

        def act(v):
            acc = tuple(Fraction(0) for _ in range(Lt))
            for r, t in enumerate(v):
                if t != 0:
                    acc = mul_t(acc, pow_t(c1[r], t))
            return acc

        out = []
        for q in range(Lt):
            seq = [_unit(Lt, q)]
            for _ in range(D + 1):
                seq.append(act(seq[-1]))
            comps = []
            for c in range(Lt):
                vals = [seq[n][c] for n in range(D + 1)]
                if _poly.lagrange(vals, D + 1) != seq[D + 1][c]:
                    raise _InterpolationMiss()
                comps.append(vals)
            out.append(comps)
        return out


class _InterpolationMiss(Exception):
    pass


# --------------------------------------------------------------------------
# schemas and elements


class NilSchema:
    """An explicitly coordinatized filtered nilpotent Lie group with lattice Z^m."""

    def __init__(
        self,
        name: str,
        basis: Sequence[str],
        commutators: Mapping[Tuple[int, int], Mapping[int, RationalLike]],
        filtration_kind: str,
        filtration: Mapping,
        nil_class: Optional[int] = None,
    ):
        self.name = name
        self.basis = tuple(basis)
        self.dim = len(self.basis)
        if self.dim == 0:
            raise SchemaError("a schema needs at least one basis element")
        table: Dict[Tuple[int, int], Word] = {}
        for (i, j), word in commutators.items():
            if not (0 <= i < j < self.dim):
                raise SchemaError(f"commutator entry ({i}, {j}) must satisfy i < j < m")
            clean = {int(q): as_rational(t) for q, t in word.items() if as_rational(t) != 0}
            for q in clean:
                if q <= j or q >= self.dim:
                    raise SchemaError(
                        f"[e_{i}, e_{j}] references position {q}; only positions after {j} are allowed"
                    )
            if clean:
                table[(i, j)] = clean
        self.table = table
        if filtration_kind not in FILTRATION_KINDS:
            raise SchemaError(f"unknown filtration kind {filtration_kind!r}")
        self.filtration_kind = filtration_kind
        filt = {}
        for idx, pos in filtration.items():
            key = normalize_index(filtration_kind, idx)
            filt[key] = frozenset(int(q) for q in pos)
        self.filtration = dict(sorted(filt.items(), key=lambda kv: index_sort_key(filtration_kind, kv[0])))
        self._check_filtration_shape()
        weights = _weights(self.dim, table)
        self.nil_class = max(weights) if nil_class is None else int(nil_class)
        if self.nil_class > MAX_CLASS or max(weights) > MAX_CLASS:
            raise SchemaError(f"nilpotency class above {MAX_CLASS} is not supported")

    def _check_filtration_shape(self):
        z = self.zero_index
        if z not in self.filtration:
            raise SchemaError("filtration must list the zero index")
        if self.filtration[z] != frozenset(range(self.dim)):
            raise SchemaError("G_0 must be the whole group")
        for pos in self.filtration.values():
            if any(q < 0 or q >= self.dim for q in pos):
                raise SchemaError("filtration references a position outside the basis")

    # -- law -------------------------------------------------------------
    @functools.cached_property
    def _law(self) -> _Law:
        return _Law(self.dim, self.table)

    @property
    def zero_index(self) -> Index:
        if self.filtration_kind == DEGREE:
            return 0
        if self.filtration_kind == DEGREE_RANK:
            return (0, 0)
        k = len(next(iter(self.filtration)))
        return (0,) * k

    @property
    def domain_dim(self) -> int:
        """Number of index components (1 unless multidegree)."""
        if self.filtration_kind == MULTIDEGREE:
            return len(self.zero_index)
        return 1

    def identity(self) -> "GroupElement":
        return GroupElement(self, (Fraction(0),) * self.dim)

    def element(self, coords: Iterable[RationalLike]) -> "GroupElement":
        return GroupElement(self, tuple(as_rational(c) for c in coords))

    def basis_element(self, p: int, t: RationalLike = 1) -> "GroupElement":
        return GroupElement(self, _unit(self.dim, p, as_rational(t)))

    def word(self, word: Mapping[int, RationalLike]) -> "GroupElement":
        v = [Fraction(0)] * self.dim
        for q, t in word.items():
            v[q] = as_rational(t)
        return GroupElement(self, tuple(v))

    # -- filtration --------------------------------------------------------
    def positions(self, index) -> frozenset:
        """Basis positions spanning G_index."""
        key = normalize_index(self.filtration_kind, index)
        if key in self.filtration:
            return self.filtration[key]
        kind = self.filtration_kind
        if kind == MULTIDEGREE:
            return frozenset()
        above = [k for k in self.filtration if index_leq(kind, key, k)]
        if not above:
            return frozenset()
        if kind == DEGREE_RANK and key[1] == 0 and (key[0], 1) in self.filtration:
            return self.filtration[(key[0], 1)]
        raise SchemaError(f"filtration index {key!r} is not listed and lies inside the listed range")

    def contains(self, index, x: "GroupElement") -> bool:
        return x.support() <= self.positions(index)

    @property
    def degrees(self) -> List[Index]:
        """Indices whose subgroup is nontrivial (the downset J)."""
        return [k for k, v in self.filtration.items() if v]

    def add_index(self, a, b) -> Index:
        kind = self.filtration_kind
        return index_add(kind, normalize_index(kind, a), normalize_index(kind, b))

    @functools.cached_property
    def commutator_positions(self) -> frozenset:
        out = set()
        for word in self.table.values():
            out.update(word)
        return frozenset(out)

    @functools.cached_property
    def horizontal_positions(self) -> Tuple[int, ...]:
        """Positions outside the span of all commutators; coordinates there are additive."""
        return tuple(p for p in range(self.dim) if p not in self.commutator_positions)

    # -- arithmetic ----------------------------------------------------------
    def _same(self, x: "GroupElement"):
        if x.schema is not self and (x.schema.name != self.name or x.schema.dim != self.dim):
            raise SchemaError(f"element of schema {x.schema.name!r} used with {self.name!r}")

    def mul(self, x: "GroupElement", y: "GroupElement") -> "GroupElement":
        self._same(x)
        self._same(y)
        return GroupElement(self, self._law.mul(x.coords, y.coords))

    def power(self, x: "GroupElement", t: RationalLike) -> "GroupElement":
        self._same(x)
        return GroupElement(self, self._law.pow(x.coords, as_rational(t)))

    def inverse(self, x: "GroupElement") -> "GroupElement":
        return self.power(x, -1)

    def commutator(self, x: "GroupElement", y: "GroupElement") -> "GroupElement":
        xi, yi = self.inverse(x), self.inverse(y)
        return self.mul(self.mul(xi, yi), self.mul(x, y))

    def __repr__(self):
        return f"NilSchema({self.name!r}, dim={self.dim}, {self.filtration_kind})"


class GroupElement:
    """e_1^{t_1} ... e_m^{t_m} with exact rational t_i."""

    __slots__ = ("schema", "coords")

    def __init__(self, schema: NilSchema, coords: Sequence):
        if len(coords) != schema.dim:
            raise SchemaError(f"expected {schema.dim} coordinates, got {len(coords)}")
        self.schema = schema
        self.coords = tuple(c if type(c) is Fraction else Fraction(c) for c in coords)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return self.schema.mul(self, other)

    def __pow__(self, t) -> "GroupElement":
        return self.schema.power(self, t)

    def inv(self) -> "GroupElement":
        return self.schema.inverse(self)

    def support(self) -> frozenset:
        return frozenset(i for i, c in enumerate(self.coords) if c != 0)

    def is_identity(self) -> bool:
        return not any(self.coords)

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coords)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroupElement)
            and other.coords == self.coords
            and other.schema.name == self.schema.name
        )

    def __hash__(self):
        return hash((self.schema.name, self.coords))

    def __repr__(self):
        inner = ", ".join(format_rational(c) for c in self.coords)
        return f"<{self.schema.name}: ({inner})>"


def mul(x: GroupElement, y: GroupElement) -> GroupElement:
    return x.schema.mul(x, y)


def power(x: GroupElement, t: RationalLike) -> GroupElement:
    return x.schema.power(x, t)


def inverse(x: GroupElement) -> GroupElement:
    return x.schema.inverse(x)


def commutator(x: GroupElement, y: GroupElement) -> GroupElement:
    if x.schema.name != y.schema.name:
        raise SchemaError("schema mismatch")
    return x.schema.commutator(x, y)


def reduce_mod_lattice(
    x: GroupElement,
    side: str = "right",
    center: Optional[Sequence[RationalLike]] = None,
) -> Tuple[GroupElement, GroupElement]:
    """Reduce x modulo the integer lattice, one coordinate at a time.

    ``side="right"`` works in G/Gamma and returns (reduced, gamma) with
    ``x == reduced * gamma``.  ``side="left"`` works in Gamma\\G and returns
    (reduced, gamma) with ``x == gamma * reduced``.  Coordinate i of the
    result lies in ``center[i] + (-1/2, 1/2]`` (default center 0).
    """
    s = x.schema
    cur = x
    gamma = s.identity()
    for i in range(s.dim):
        c = as_rational(center[i]) if center is not None else 0
        k = nearest_int(cur.coords[i] - c)
        if k == 0:
            continue
        step = s.basis_element(i, -k)
        if side == "right":
            cur = s.mul(cur, step)
            gamma = s.mul(s.basis_element(i, k), gamma)
        elif side == "left":
            cur = s.mul(step, cur)
            gamma = s.mul(gamma, s.basis_element(i, k))
        else:
            raise ValueError("side must be 'right' or 'left'")
    return cur, gamma


# --------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class HorizontalChar:
    """xi(g) = sum_p k_p * g_p mod 1 over horizontal positions p."""

    schema: NilSchema
    coeffs: Tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != len(self.schema.horizontal_positions):
            raise SchemaError("one integer coefficient per horizontal position is required")
        object.__setattr__(self, "coeffs", tuple(int(k) for k in self.coeffs))

    def value(self, x: GroupElement) -> Fraction:
        return sum((k * x.coords[p] for k, p in zip(self.coeffs, self.schema.horizontal_positions)), Fraction(0))

    def __call__(self, x: GroupElement) -> TorusPoint:
        return TorusPoint(self.value(x))

    def is_trivial(self) -> bool:
        return not any(self.coeffs)


@dataclass(frozen=True)
class VerticalChar:
    """eta(g) = sum_p k_p * g_p for g in G_d; integer k_p."""

    schema: NilSchema
    index: Index
    coeffs: Tuple[Tuple[int, int], ...]  # (position, coefficient)

    def __post_init__(self):
        idx = normalize_index(self.schema.filtration_kind, self.index)
        object.__setattr__(self, "index", idx)
        allowed = self.schema.positions(idx)
        clean = []
        for p, k in self.coeffs:
            if int(k) != k:
                raise SchemaError("vertical character coefficients must be integers")
            if p not in allowed:
                raise SchemaError(f"position {p} is not in G_{idx}")
            clean.append((int(p), int(k)))
        object.__setattr__(self, "coeffs", tuple(sorted(clean)))

    @classmethod
    def on(cls, schema: NilSchema, index, coeffs: Mapping[int, int]) -> "VerticalChar":
        return cls(schema, index, tuple(coeffs.items()))

    def value(self, x: GroupElement) -> Fraction:
        return sum((k * x.coords[p] for p, k in self.coeffs), Fraction(0))

    def __call__(self, x: GroupElement) -> Fraction:
        if not x.support() <= self.schema.positions(self.index):
            raise SchemaError("vertical character evaluated outside its subgroup")
        return self.value(x)

    def is_trivial(self) -> bool:
        return not any(k for _, k in self.coeffs)


# --------------------------------------------------------------------------
# verification


def _sample_rational(rng: random.Random, spread: int = 6, den: int = 5) -> Fraction:
    return Fraction(rng.randint(-spread, spread), rng.randint(1, den))


def random_element(s: NilSchema, rng: random.Random, positions=None, integral: bool = False) -> GroupElement:
    positions = range(s.dim) if positions is None else positions
    v = [Fraction(0)] * s.dim
    for p in positions:
        v[p] = Fraction(rng.randint(-4, 4)) if integral else _sample_rational(rng)
    return GroupElement(s, tuple(v))


def _label(s: NilSchema, p: int) -> str:
    return s.basis[p]


def verify_schema(s: NilSchema, samples: int = 200, seed: int = 0) -> Report:
    """Exact axiom checks; the first violated axiom is reported with witnesses."""
    kind = s.filtration_kind
    try:
        s._law
    except SchemaError as exc:
        return Report.failed("schema", "law-derivation", str(exc))

    keys = list(s.filtration)
    for a in keys:
        for b in keys:
            if a != b and index_leq(kind, a, b) and not s.filtration[b] <= s.filtration[a]:
                return Report.failed("schema", "filtration-nesting", (a, b))
    if kind == DEGREE_RANK:
        for (d, r), pos in s.filtration.items():
            if d >= 1 and r == 0 and (d, 1) in s.filtration and s.filtration[(d, 1)] != pos:
                return Report.failed("schema", "degree-rank-axiom", (d, r))

    rng = random.Random(seed)
    for key, pos in s.filtration.items():
        if not pos:
            continue
        for _ in range(5):
            x = random_element(s, rng, sorted(pos))
            y = random_element(s, rng, sorted(pos))
            if not s.mul(x, y).support() <= pos:
                return Report.failed("schema", "filtration-subgroup", (key, x, y))

    pair_exps = [(Fraction(1), Fraction(1)), (Fraction(2, 3), Fraction(-5, 4))]
    supports = {}
    for p in range(s.dim):
        for q in range(s.dim):
            if p != q:
                sup = frozenset()
                for u, v in pair_exps:
                    sup |= s.commutator(s.basis_element(p, u), s.basis_element(q, v)).support()
                supports[(p, q)] = sup
    for a in keys:
        for b in keys:
            target = s.positions(index_add(kind, a, b))
            for p in sorted(s.filtration[a]):
                for q in sorted(s.filtration[b]):
                    if p != q and not supports[(p, q)] <= target:
                        return Report.failed(
                            "schema",
                            "filtration-inclusion",
                            (_label(s, p), _label(s, q)),
                            indices=(a, b),
                        )

    for i in range(s.dim):
        for j in range(i + 1, s.dim):
            got = s.commutator(s.basis_element(i), s.basis_element(j))
            want = s.word(s.table.get((i, j), {}))
            if got != want:
                return Report.failed("schema", "commutator-table", (_label(s, i), _label(s, j)))

    e = s.identity()
    for _ in range(samples):
        x, y, z = (random_element(s, rng) for _ in range(3))
        if s.mul(s.mul(x, y), z) != s.mul(x, s.mul(y, z)):
            return Report.failed("schema", "associativity", (x, y, z))
        if s.mul(x, s.inverse(x)) != e or s.mul(s.inverse(x), x) != e:
            return Report.failed("schema", "inverse", x)
        if s.mul(x, e) != x or s.mul(e, x) != x:
            return Report.failed("schema", "identity", x)
    return Report.passed("schema", name=s.name, dim=s.dim, samples=samples)


# --------------------------------------------------------------------------
# catalog


def _degree_filtration(m: int, levels: Sequence[Iterable[int]]) -> dict:
    return {i: frozenset(pos) for i, pos in enumerate(levels)}


@functools.lru_cache(maxsize=None)
def torus(k: int = 1, d: int = 1) -> NilSchema:
    if k < 1 or d < 1:
        raise SchemaError("torus needs k >= 1 and d >= 1")
    if k > 12:
        raise SchemaError("dimension above 12 is not supported")
    allpos = range(k)
    filt = {i: allpos for i in range(d + 1)}
    filt[d + 1] = ()
    basis = [f"e{i + 1}" for i in range(k)]
    return NilSchema(f"torus({k},{d})", basis, {}, DEGREE, filt, nil_class=1)


@functools.lru_cache(maxsize=None)
def heisenberg() -> NilSchema:
    return NilSchema(
        "heisenberg",
        ["e1", "e2", "e12"],
        {(0, 1): {2: 1}},
        DEGREE,
        {0: (0, 1, 2), 1: (0, 1, 2), 2: (2,), 3: ()},
    )


@functools.lru_cache(maxsize=None)
def heisenberg_degrank32() -> NilSchema:
    """Heisenberg group with e1 in degree 2, e2 in degree 1, [e1,e2] in (2,2)..(3,2)."""
    full, mid, top = (0, 1, 2), (0, 2), (2,)
    filt = {
        (0, 0): full, (1, 0): full, (1, 1): full,
        (2, 0): mid, (2, 1): mid,
        (2, 2): top, (3, 0): top, (3, 1): top, (3, 2): top,
        (3, 3): (), (4, 0): (),
    }
    return NilSchema("heisenberg_degrank32", ["e1", "e2", "e12"], {(0, 1): {2: 1}}, DEGREE_RANK, filt)


@functools.lru_cache(maxsize=None)
def free2step(k: int = 2) -> NilSchema:
    if k < 2:
        raise SchemaError("free2step needs at least two generators")
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    m = k + len(pairs)
    if m > 12:
        raise SchemaError("dimension above 12 is not supported")
    basis = [f"x{i + 1}" for i in range(k)] + [f"[x{i + 1},x{j + 1}]" for i, j in pairs]
    table = {(i, j): {k + n: 1} for n, (i, j) in enumerate(pairs)}
    comm = range(k, m)
    filt = {0: range(m), 1: range(m), 2: comm, 3: ()}
    return NilSchema(f"free2step({k})", basis, table, DEGREE, filt)


@functools.lru_cache(maxsize=None)
def universal(dims: Tuple[int, ...], degree_rank: Tuple[int, int]) -> NilSchema:
    """The universal group of the given dimension vector and degree-rank.

    Generators of degree i come from ``dims[i-1]``.  Iterated commutators of
    total degree above d vanish, as do those of total degree d and length
    above r.  Supported up to d = 3 and dimension 12.
    """
    dims = tuple(int(v) for v in dims)
    d, r = degree_rank
    if d < 1 or d > 3 or not (0 <= r <= d):
        raise SchemaError("universal groups are supported for degree-rank (d, r) with 1 <= d <= 3, r <= d")
    if len(dims) > d:
        raise SchemaError("dimension vector longer than the degree")

    def kept(weight, length):
        return weight < d or (weight == d and length <= r)

    # (label, weight, length, key)
    elems = []
    gens = []
    for deg, count in enumerate(dims, start=1):
        for j in range(count):
            if kept(deg, 1):
                gens.append((f"e{deg},{j + 1}", deg))
    for lab, w in gens:
        elems.append((lab, w, 1, ("g", lab)))
    n = len(gens)
    for a in range(n):
        for b in range(a + 1, n):
            w = gens[a][1] + gens[b][1]
            if kept(w, 2):
                elems.append((f"[{gens[a][0]},{gens[b][0]}]", w, 2, ("c", a, b)))
    ones = [a for a in range(n) if gens[a][1] == 1]
    for a in ones:
        for b in ones:
            if b <= a:
                continue
            for c in ones:
                if c >= a and kept(3, 3):
                    elems.append((f"[[{gens[a][0]},{gens[b][0]}],{gens[c][0]}]", 3, 3, ("t", a, b, c)))
    elems.sort(key=lambda e: (e[1], e[2]))
    if len(elems) > 12:
        raise SchemaError(f"universal group has dimension {len(elems)} > 12")
    pos = {e[3]: i for i, e in enumerate(elems)}
    gpos = [pos[("g", g[0])] for g in gens]

    table: Dict[Tuple[int, int], Dict[int, int]] = {}

    def put(i, j, word):
        word = {q: t for q, t in word.items() if t}
        if not word:
            return
        if i > j:
            i, j = j, i
            word = {q: -t for q, t in word.items()}
        table[(i, j)] = word

    for a in range(n):
        for b in range(a + 1, n):
            key = ("c", a, b)
            if key in pos:
                put(gpos[a], gpos[b], {pos[key]: 1})
    for key, i in pos.items():
        if key[0] != "c":
            continue
        _, a, b = key
        if gens[a][1] != 1 or gens[b][1] != 1:
            continue
        for c in ones:
            # [c_ab, x_c] in Hall form
            if c >= a:
                word = {pos[("t", a, b, c)]: 1} if ("t", a, b, c) in pos else {}
            else:
                word = {}
                if ("t", c, b, a) in pos:
                    word[pos[("t", c, b, a)]] = word.get(pos[("t", c, b, a)], 0) + 1
                if ("t", c, a, b) in pos:
                    word[pos[("t", c, a, b)]] = word.get(pos[("t", c, a, b)], 0) - 1
            # table stores [x_c, c_ab] = [c_ab, x_c]^{-1}
            put(gpos[c], i, {q: -t for q, t in word.items()})

    filt = {}
    for dd in range(d + 2):
        for rr in range(dd + 1):
            idx = normalize_index(DEGREE_RANK, (dd, rr))
            filt[idx] = [i for i, e in enumerate(elems) if e[1] > dd or (e[1] == dd and e[2] >= rr)]
    name = f"universal({','.join(map(str, dims))};{d},{r})"
    return NilSchema(name, [e[0] for e in elems], table, DEGREE_RANK, filt)


@functools.lru_cache(maxsize=None)
def appC_multidegree() -> NilSchema:
    basis = ["a1", "a2", "a12", "b1", "b2", "b12", "c12"]
    table = {(0, 4): {6: 1}, (1, 3): {6: -1}}
    filt = {
        (0, 0): range(7),
        (1, 0): (0, 1, 2, 6),
        (0, 1): (3, 4, 5, 6),
        (1, 1): (6,),
    }
    return NilSchema("appC_multidegree", basis, table, MULTIDEGREE, filt)


def product(s1: NilSchema, s2: NilSchema) -> NilSchema:
    if s1.filtration_kind != s2.filtration_kind:
        raise SchemaError("product needs filtrations of the same kind")
    if s1.dim + s2.dim > 12:
        raise SchemaError("dimension above 12 is not supported")
    off = s1.dim
    table = dict(s1.table)
    for (i, j), word in s2.table.items():
        table[(i + off, j + off)] = {q + off: t for q, t in word.items()}
    filt = {}
    for key in set(s1.filtration) | set(s2.filtration):
        filt[key] = set(_positions_or_empty(s1, key)) | {q + off for q in _positions_or_empty(s2, key)}
    basis = [f"{b}'" for b in s1.basis] + [f"{b}''" for b in s2.basis]
    return NilSchema(f"product({s1.name},{s2.name})", basis, table, s1.filtration_kind, filt,
                     nil_class=max(s1.nil_class, s2.nil_class))


def _positions_or_empty(s: NilSchema, key) -> frozenset:
    try:
        return s.positions(key)
    except SchemaError:
        return frozenset()


CATALOG_NAMES = ("torus", "heisenberg", "heisenberg_degrank32", "free2step", "universal", "appC_multidegree", "product")


def catalog(name: str, *params) -> NilSchema:
    """Look up a catalog group, e.g. ``catalog("torus", 2, 3)``."""
    if name == "torus":
        return torus(*params)
    if name == "heisenberg":
        return heisenberg()
    if name == "heisenberg_degrank32":
        return heisenberg_degrank32()
    if name == "free2step":
        return free2step(*params)
    if name == "universal":
        dims, dr = params
        return universal(tuple(dims), tuple(dr))
    if name == "appC_multidegree":
        return appC_multidegree()
    if name == "product":
        a, b = params
        a = a if isinstance(a, NilSchema) else schema_from_ref(a)
        b = b if isinstance(b, NilSchema) else schema_from_ref(b)
        return product(a, b)
    raise SchemaError(f"unknown catalog group {name!r}")


def schema_from_ref(ref: str) -> NilSchema:
    """Parse a catalog reference such as ``torus(2,3)`` or ``universal(2,1;3,2)``."""
    ref = ref.strip()
    if "(" not in ref:
        return catalog(ref)
    head, rest = ref.split("(", 1)
    inner = rest[:-1] if rest.endswith(")") else rest
    head = head.strip()
    if head == "product":
        depth, cut = 0, None
        for i, ch in enumerate(inner):
            depth += ch == "("
            depth -= ch == ")"
            if ch == "," and depth == 0:
                cut = i
                break
        if cut is None:
            raise SchemaError(f"bad product reference {ref!r}")
        return product(schema_from_ref(inner[:cut]), schema_from_ref(inner[cut + 1:]))
    if head == "universal":
        if inner.count(";") != 1:
            raise SchemaError(f"universal reference needs 'dims;degree,rank', got {ref!r}")
        dims, dr = inner.split(";")
        return universal(tuple(int(v) for v in dims.split(",") if v.strip()), tuple(int(v) for v in dr.split(",")))
    args = [int(v) for v in inner.split(",") if v.strip()]
    return catalog(head, *args)


# --------------------------------------------------------------------------
# serialization


def _format_word(word: Mapping[int, Fraction]) -> str:
    return " ".join(f"{q}^{format_rational(t)}" for q, t in sorted(word.items()))


def _parse_word(text: str) -> Dict[int, Fraction]:
    out = {}
    for tok in text.split():
        q, t = tok.split("^")
        out[int(q)] = as_rational(t)
    return out


def schema_to_dict(s: NilSchema) -> dict:
    return {
        "name": s.name,
        "basis": list(s.basis),
        "commutators": [f"{i} {j} -> {_format_word(w)}" for (i, j), w in sorted(s.table.items())],
        "filtration": {
            "kind": s.filtration_kind,
            "groups": {format_index(s.filtration_kind, k): sorted(v) for k, v in s.filtration.items()},
        },
        "class": s.nil_class,
    }


def schema_from_dict(doc: Mapping) -> NilSchema:
    table = {}
    for entry in doc.get("commutators", []):
        lhs, rhs = entry.split("->")
        i, j = (int(v) for v in lhs.split())
        table[(i, j)] = _parse_word(rhs)
    kind = doc["filtration"]["kind"]
    filt = {parse_index(kind, k): v for k, v in doc["filtration"]["groups"].items()}
    return NilSchema(doc["name"], doc["basis"], table, kind, filt, nil_class=doc.get("class"))


def dumps_schema(s: NilSchema) -> str:
    return json.dumps(schema_to_dict(s), indent=2, sort_keys=True)


def loads_schema(text: str) -> NilSchema:
    return schema_from_dict(json.loads(text))


def pretty_schema(s: NilSchema) -> str:
    lines = [f"{s.name}: dimension {s.dim}, class {s.nil_class}, {s.filtration_kind} filtration"]
    lines.append("basis: " + ", ".join(f"{i}:{b}" for i, b in enumerate(s.basis)))
    for (i, j), w in sorted(s.table.items()):
        rhs = " ".join(f"{s.basis[q]}^{format_rational(t)}" for q, t in sorted(w.items()))
        lines.append(f"  [{s.basis[i]}, {s.basis[j]}] = {rhs}")
    for k, v in s.filtration.items():
        names = ", ".join(s.basis[q] for q in sorted(v)) or "{id}"
        lines.append(f"  G_{format_index(s.filtration_kind, k)} = <{names}>")
    return "\n".join(lines)
