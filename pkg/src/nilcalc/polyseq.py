"""Polynomial sequences Z^k -> G stored by their Taylor coefficients.

``g(n) = prod_j g_j^{binom(n, j)}`` with the product taken over the downset J
in graded-lexicographic order and ``binom(n, j) = prod_i binom(n_i, j_i)``.
Derivatives, products and inverses are computed by evaluating on the grid
``{0..deg}^k`` and re-extracting coefficients, which is exact because the
Taylor form is unique.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from math import factorial
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ._report import Report
from .nilgroup import (
    DEGREE,
    DEGREE_RANK,
    MULTIDEGREE,
    GroupElement,
    NilSchema,
    SchemaError,
    index_add,
    normalize_index,
    random_element,
)
from .scalar import TorusPoint

Multi = Tuple[int, ...]


class TaylorError(ValueError):
    """Samples that no polynomial of the requested shape fits."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


def gen_binom(n: int, j: int) -> int:
    """binom(n, j) for any integer n, j >= 0."""
    if j < 0:
        return 0
    num = 1
    for t in range(j):
        num *= n - t
    return num // factorial(j)


def multi_binom(n: Sequence[int], j: Sequence[int]) -> int:
    out = 1
    for a, b in zip(n, j):
        out *= gen_binom(a, b)
        if out == 0:
            return 0
    return out


def graded_lex(J: Iterable[Multi]) -> List[Multi]:
    return sorted(J, key=lambda j: (sum(j), j))


def is_downset(J: Iterable[Multi]) -> bool:
    Js = set(J)
    for j in Js:
        for i, v in enumerate(j):
            if v > 0:
                lower = j[:i] + (v - 1,) + j[i + 1:]
                if lower not in Js:
                    return False
    return True


def filt_index(schema: NilSchema, j: Multi):
    """Filtration index attached to the Taylor slot j."""
    kind = schema.filtration_kind
    if kind == DEGREE:
        return sum(j)
    if kind == DEGREE_RANK:
        return normalize_index(kind, (sum(j), 0))
    if len(j) != schema.domain_dim:
        raise SchemaError(f"multidegree schema {schema.name} expects a {schema.domain_dim}-dimensional domain")
    return tuple(j)


def domain_step_index(schema: NilSchema, axis: Optional[int] = None):
    """Index of the domain filtration piece that a step h belongs to."""
    kind = schema.filtration_kind
    if kind == DEGREE:
        return 1
    if kind == DEGREE_RANK:
        return (1, 0)
    k = schema.domain_dim
    return tuple(1 if i == axis else 0 for i in range(k))


def full_downset(schema: NilSchema, k: int) -> List[Multi]:
    """All Taylor slots whose filtration piece is nontrivial."""
    kind = schema.filtration_kind
    if kind == MULTIDEGREE:
        if k != schema.domain_dim:
            raise SchemaError("domain dimension does not match the multidegree filtration")
        return graded_lex(key for key, pos in schema.filtration.items() if pos)
    if kind == DEGREE:
        top = max(key for key, pos in schema.filtration.items() if pos)
    else:
        top = max(key[0] for key, pos in schema.filtration.items() if pos)
    return graded_lex(j for j in itertools.product(range(top + 1), repeat=k) if sum(j) <= top)


@dataclass(frozen=True)
class PolySeq:
    schema: NilSchema
    k: int
    coeffs: Tuple[Tuple[Multi, GroupElement], ...]

    def __init__(self, schema: NilSchema, coeffs: Mapping, k: Optional[int] = None, check: bool = True):
        items = {}
        for j, g in coeffs.items():
            j = (j,) if isinstance(j, int) else tuple(int(v) for v in j)
            if not isinstance(g, GroupElement):
                g = schema.element(g)
            items[j] = g
        if k is None:
            k = len(next(iter(items))) if items else 1
        if any(len(j) != k for j in items):
            raise ValueError("all Taylor indices must have the same length")
        zero = (0,) * k
        items.setdefault(zero, schema.identity())
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "coeffs", tuple((j, items[j]) for j in graded_lex(items)))
        if check:
            if not is_downset(items):
                raise ValueError("Taylor indices must form a downset")
            for j, g in self.coeffs:
                if not g.support() <= schema.positions(filt_index(schema, j)):
                    raise SchemaError(f"Taylor coefficient g_{j} is not in G_{filt_index(schema, j)}")

    @property
    def J(self) -> List[Multi]:
        return [j for j, _ in self.coeffs]

    def coeff(self, j) -> GroupElement:
        j = (j,) if isinstance(j, int) else tuple(j)
        for jj, g in self.coeffs:
            if jj == j:
                return g
        return self.schema.identity()

    @property
    def degree(self) -> int:
        return max(sum(j) for j, g in self.coeffs if not g.is_identity()) if any(
            not g.is_identity() for _, g in self.coeffs) else 0

    def __call__(self, n) -> GroupElement:
        return eval_poly(self, n)

    def trimmed(self) -> "PolySeq":
        """Drop identity coefficients that are not needed to keep J a downset."""
        keep = {j for j, g in self.coeffs if not g.is_identity()}
        closure = set()
        for j in keep:
            closure.update(itertools.product(*(range(v + 1) for v in j)))
        closure.add((0,) * self.k)
        return PolySeq(self.schema, {j: g for j, g in self.coeffs if j in closure}, k=self.k, check=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolySeq) or other.k != self.k:
            return False
        a = {j: g for j, g in self.trimmed().coeffs if not g.is_identity()}
        b = {j: g for j, g in other.trimmed().coeffs if not g.is_identity()}
        return a == b

    def __hash__(self):
        return hash(tuple(sorted((j, g.coords) for j, g in self.coeffs if not g.is_identity())))


def _as_point(n, k: int) -> Multi:
    if isinstance(n, int):
        n = (n,)
    n = tuple(int(v) for v in n)
    if len(n) != k:
        raise ValueError(f"expected a point of Z^{k}")
    return n


def eval_poly(g: PolySeq, n) -> GroupElement:
    """g(n) as the ordered product of g_j^{binom(n, j)}."""
    n = _as_point(n, g.k)
    s = g.schema
    acc = None
    for j, gj in g.coeffs:
        if gj.is_identity():
            continue
        b = multi_binom(n, j)
        if b == 0:
            continue
        term = gj if b == 1 else s.power(gj, b)
        acc = term if acc is None else s.mul(acc, term)
    return acc if acc is not None else s.identity()


def grid_for(J: Iterable[Multi], k: int) -> List[Multi]:
    J = list(J)
    degs = [max((j[i] for j in J), default=0) for i in range(k)]
    return [p for p in itertools.product(*(range(d + 1) for d in degs))]


def taylor_extract(
    samples: Mapping,
    schema: NilSchema,
    J: Iterable,
    check: bool = True,
) -> PolySeq:
    """The unique Taylor form with slots J agreeing with the samples.

    ``samples`` maps grid points of ``{0..deg}^k`` to group elements.  Raises
    TaylorError naming the first grid point the fitted form misses.
    """
    J = [(j,) if isinstance(j, int) else tuple(j) for j in J]
    k = len(J[0])
    samples = {(p,) if isinstance(p, int) else tuple(p): v for p, v in samples.items()}
    order = graded_lex(J)
    coeffs: Dict[Multi, GroupElement] = {}
    for j in order:
        if j not in samples:
            raise TaylorError(f"missing sample at grid point {j}", j)
        prefix = None
        for jj in order:
            if jj == j:
                break
            b = multi_binom(j, jj)
            if b == 0 or coeffs[jj].is_identity():
                continue
            term = schema.power(coeffs[jj], b)
            prefix = term if prefix is None else schema.mul(prefix, term)
        gj = samples[j] if prefix is None else schema.mul(schema.inverse(prefix), samples[j])
        coeffs[j] = gj
    seq = PolySeq(schema, coeffs, k=k, check=False)
    for p in grid_for(J, k):
        if p in samples and eval_poly(seq, p) != samples[p]:
            raise TaylorError(f"samples are not polynomial with Taylor slots {order}: mismatch at {p}", p)
    for p in sorted(set(samples) - set(grid_for(J, k))):
        if eval_poly(seq, p) != samples[p]:
            raise TaylorError(f"samples are not polynomial with Taylor slots {order}: mismatch at {p}", p)
    if check:
        for j, gj in seq.coeffs:
            if not gj.support() <= schema.positions(filt_index(schema, j)):
                raise TaylorError(f"extracted coefficient g_{j} lies outside its filtration piece", j)
    return seq


def from_function(schema: NilSchema, f: Callable, k: int = 1, J=None, check: bool = True) -> PolySeq:
    """Taylor form of a map given pointwise; J defaults to the full downset."""
    J = full_downset(schema, k) if J is None else J
    grid = grid_for(J, k)
    samples = {p: f(p if k > 1 else p[0]) for p in grid}
    return taylor_extract(samples, schema, J, check=check).trimmed()


def _resample(g: PolySeq, f: Callable[[Multi], GroupElement], J=None, check: bool = False) -> PolySeq:
    J = full_downset(g.schema, g.k) if J is None else J
    samples = {p: f(p) for p in grid_for(J, g.k)}
    return taylor_extract(samples, g.schema, J, check=check).trimmed()


def derivative(g: PolySeq, h) -> PolySeq:
    """Taylor form of n -> g(n+h) g(n)^{-1}."""
    h = _as_point(h, g.k)
    s = g.schema

    def f(n):
        shifted = tuple(a + b for a, b in zip(n, h))
        return s.mul(eval_poly(g, shifted), s.inverse(eval_poly(g, n)))

    return _resample(g, f)


def shift(g: PolySeq, h) -> PolySeq:
    """Taylor form of n -> g(n+h)."""
    h = _as_point(h, g.k)
    return _resample(g, lambda n: eval_poly(g, tuple(a + b for a, b in zip(n, h))))


def pointwise_product(g: PolySeq, g2: PolySeq) -> PolySeq:
    if g.schema.name != g2.schema.name or g.k != g2.k:
        raise SchemaError("pointwise product needs the same schema and domain")
    s = g.schema
    return _resample(g, lambda n: s.mul(eval_poly(g, n), eval_poly(g2, n)))


def pointwise_inverse(g: PolySeq) -> PolySeq:
    s = g.schema
    return _resample(g, lambda n: s.inverse(eval_poly(g, n)))


def constant(schema: NilSchema, x: Optional[GroupElement] = None, k: int = 1) -> PolySeq:
    return PolySeq(schema, {(0,) * k: x if x is not None else schema.identity()}, k=k)


def random_polyseq(schema: NilSchema, rng: random.Random, k: Optional[int] = None, J=None) -> PolySeq:
    """Random Taylor form with g_j drawn from the filtration piece of slot j."""
    k = schema.domain_dim if k is None else k
    J = full_downset(schema, k) if J is None else J
    coeffs = {j: random_element(schema, rng, positions=schema.positions(filt_index(schema, j))) for j in J}
    return PolySeq(schema, coeffs, k=k)


# --------------------------------------------------------------------------
# polynomiality


def iterated_derivative(value: Callable[[Multi], GroupElement], schema: NilSchema, hs: Sequence[Multi], n: Multi):
    """partial_{h_1} ... partial_{h_m} of a pointwise map, evaluated at n."""
    if not hs:
        return value(n)
    h = hs[0]
    rest = hs[1:]
    a = iterated_derivative(value, schema, rest, tuple(x + y for x, y in zip(n, h)))
    b = iterated_derivative(value, schema, rest, n)
    return schema.mul(a, schema.inverse(b))


def _step_choices(schema: NilSchema, k: int, R: int):
    """(h, index) pairs from the domain filtration with |h| <= R."""
    out = []
    if schema.filtration_kind == MULTIDEGREE:
        for axis in range(k):
            for t in range(-R, R + 1):
                h = tuple(t if i == axis else 0 for i in range(k))
                out.append((h, domain_step_index(schema, axis)))
    else:
        idx = domain_step_index(schema)
        for h in itertools.product(range(-R, R + 1), repeat=k):
            out.append((h, idx))
    return out


def verify_polynomial(g: PolySeq, max_order: int, h_range: int = 2, seed: int = 0, samples: int = 500) -> Report:
    """Check that every iterated derivative lands in the right filtration piece."""
    s, k = g.schema, g.k
    cache: Dict[Multi, GroupElement] = {}

    def value(n):
        v = cache.get(n)
        if v is None:
            v = cache[n] = eval_poly(g, n)
        return v

    choices = _step_choices(s, k, h_range)
    bases = [tuple(p) for p in itertools.product((0, 1, -1), repeat=k)]
    rng = random.Random(seed)
    checked = 0
    for m in range(1, max_order + 1):
        if k * m <= 6:
            tuples: Iterable = itertools.product(choices, repeat=m)
        else:
            tuples = (tuple(rng.choice(choices) for _ in range(m)) for _ in range(samples))
        for tup in tuples:
            hs = [h for h, _ in tup]
            idx = tup[0][1]
            for _, i in tup[1:]:
                idx = index_add(s.filtration_kind, idx, i)
            allowed = s.positions(idx)
            for n in bases:
                d = iterated_derivative(value, s, hs, n)
                checked += 1
                if not d.support() <= allowed:
                    return Report.failed(
                        "polynomial", "derivative-outside-filtration",
                        {"order": m, "steps": hs, "n": n, "value": d, "index": idx},
                    )
    return Report.passed("polynomial", evaluations=checked, max_order=max_order, h_range=h_range)


# --------------------------------------------------------------------------
# Host-Kra cubes


@dataclass(frozen=True)
class Cube:
    """Vertices indexed by subsets of [m] in binary order (bit l-1 set iff l in omega)."""

    schema: NilSchema
    degrees: Tuple
    vertices: Tuple[GroupElement, ...]

    def __post_init__(self):
        kind = self.schema.filtration_kind
        object.__setattr__(self, "degrees", tuple(normalize_index(kind, d) for d in self.degrees))
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(self.vertices) != 2 ** len(self.degrees):
            raise ValueError("a cube of order m needs 2^m vertices")

    @property
    def order(self) -> int:
        return len(self.degrees)


def cube_generator(schema: NilSchema, m: int, omega0: int, g: GroupElement) -> List[GroupElement]:
    """iota_{omega0}(g): g at every vertex containing omega0, identity elsewhere."""
    e = schema.identity()
    return [g if (w & omega0) == omega0 else e for w in range(2 ** m)]


def cube_from_generators(schema: NilSchema, m: int, gens: Sequence[Tuple[int, GroupElement]]) -> List[GroupElement]:
    verts = [schema.identity()] * (2 ** m)
    for omega0, g in gens:
        gv = cube_generator(schema, m, omega0, g)
        verts = [schema.mul(a, b) for a, b in zip(verts, gv)]
    return verts


def _hk(schema: NilSchema, degrees, verts, shift_index):
    m = len(degrees)
    if m == 0:
        g = verts[0]
        return [(0, g)] if g.support() <= schema.positions(shift_index) else None
    half = 2 ** (m - 1)
    front, back = verts[:half], verts[half:]
    diff = [schema.mul(b, schema.inverse(a)) for a, b in zip(front, back)]
    c1 = _hk(schema, degrees[:-1], front, shift_index)
    if c1 is None:
        return None
    c2 = _hk(schema, degrees[:-1], diff, index_add(schema.filtration_kind, shift_index, degrees[-1]))
    if c2 is None:
        return None
    top = 1 << (m - 1)
    return [(w | top, g) for w, g in c2] + c1


def hk_membership(c: Cube) -> Tuple[bool, Optional[List[Tuple[int, GroupElement]]]]:
    """Decide membership in HK^{i_1..i_m}(G); the certificate lists (omega0, g)
    factors whose product, in order, reproduces the cube."""
    cert = _hk(c.schema, c.degrees, list(c.vertices), c.schema.zero_index)
    if cert is None:
        return False, None
    return True, [(w, g) for w, g in cert if not g.is_identity()]


def image_cube(g: PolySeq, points: Sequence[Multi], degrees) -> Cube:
    return Cube(g.schema, tuple(degrees), tuple(eval_poly(g, p) for p in points))


def random_domain_cube(schema: NilSchema, k: int, m: int, rng: random.Random, n_gens: int = 6, spread: int = 5):
    """A cube in HK(Z^k) with random degrees, built from at most n_gens generators.

    Returns (degrees, vertex points).
    """
    kind = schema.filtration_kind
    if kind == MULTIDEGREE:
        opts = [domain_step_index(schema, a) for a in range(k)] + [(0,) * k]
    elif kind == DEGREE_RANK:
        opts = [(1, 0), (0, 0)]
    else:
        opts = [1, 1, 0]
    degrees = [rng.choice(opts) for _ in range(m)]
    verts = [[rng.randint(-spread, spread) for _ in range(k)]] * (2 ** m)
    verts = [list(v) for v in verts]
    # generator iota_{omega0}(h) needs h in the domain piece of sum_{l in omega0} i_l
    admissible = []
    for omega0 in range(1, 2 ** m):
        total = None
        for l in range(m):
            if omega0 >> l & 1:
                total = degrees[l] if total is None else index_add(kind, total, degrees[l])
        if any(_domain_vector(schema, k, total, random.Random(t), spread) != [0] * k for t in range(3)):
            admissible.append((omega0, total))
    for _ in range(rng.randint(1, n_gens - 1) if admissible else 0):
        omega0, total = rng.choice(admissible)
        h = _domain_vector(schema, k, total, rng, spread)
        for w in range(2 ** m):
            if (w & omega0) == omega0:
                verts[w] = [a + b for a, b in zip(verts[w], h)]
    return degrees, [tuple(v) for v in verts]


def _domain_vector(schema, k, total, rng, spread):
    """Random element of the domain filtration piece with index ``total``."""
    zero = [0] * k
    kind = schema.filtration_kind
    if total is None:
        return [rng.randint(-spread, spread) for _ in range(k)]
    if kind == DEGREE:
        return [rng.randint(-spread, spread) for _ in range(k)] if total <= 1 else zero
    if kind == DEGREE_RANK:
        return [rng.randint(-spread, spread)] if total <= (1, 0) else zero
    nz = [i for i, v in enumerate(total) if v]
    if not nz:
        return [rng.randint(-spread, spread) for _ in range(k)]
    if len(nz) == 1 and total[nz[0]] == 1:
        return [rng.randint(-spread, spread) if i == nz[0] else 0 for i in range(k)]
    return zero


# --------------------------------------------------------------------------
# horizontal Taylor coefficients


def _degree_rank_positions(schema: NilSchema, i: int) -> Tuple[frozenset, frozenset]:
    """Positions spanning G_(i,1) and G_(i,2)."""
    if schema.filtration_kind == DEGREE_RANK:
        return schema.positions((i, 1)), schema.positions((i, 2))
    if schema.filtration_kind != DEGREE:
        raise SchemaError("horizontal Taylor coefficients need a degree or degree-rank filtration")
    upper = set(schema.positions(i + 1))
    for a in range(i + 1):
        b = i - a
        for p in schema.positions(a):
            for q in schema.positions(b):
                if p != q:
                    upper |= schema.commutator(schema.basis_element(p), schema.basis_element(q)).support()
    return schema.positions(i), frozenset(upper)


def horizontal_taylor(g: PolySeq, i: int) -> Tuple[TorusPoint, ...]:
    """i-th horizontal Taylor coefficient: coordinates of d^i g(0) on
    G_(i,1) modulo G_(i,2), reduced mod 1."""
    s = g.schema
    if g.k != 1:
        raise ValueError("horizontal Taylor coefficients are defined for one-dimensional domains")
    if s.filtration_kind == DEGREE_RANK:
        top = max(key[0] for key, pos in s.filtration.items() if pos)
    else:
        top = max(key for key, pos in s.filtration.items() if pos)
    if i < 0 or i > top:
        raise ValueError(f"i = {i} exceeds the degree {top} of the filtration")
    lower, upper = _degree_rank_positions(s, i)
    cache = {}

    def value(n):
        if n not in cache:
            cache[n] = eval_poly(g, n)
        return cache[n]

    d = iterated_derivative(value, s, [(1,)] * i, (0,))
    return tuple(TorusPoint(d.coords[p]) for p in sorted(lower - upper))


def horizontal_positions_at(schema: NilSchema, i: int) -> Tuple[int, ...]:
    lower, upper = _degree_rank_positions(schema, i)
    return tuple(sorted(lower - upper))


# --------------------------------------------------------------------------
# serialization


def polyseq_to_dict(g: PolySeq) -> dict:
    from .scalar import format_rational
    return {
        "schema": g.schema.name,
        "k": g.k,
        "coeffs": [[list(j), [format_rational(c) for c in x.coords]] for j, x in g.coeffs],
    }


def polyseq_from_dict(doc: Mapping, schema: NilSchema) -> PolySeq:
    coeffs = {tuple(j): schema.element(c) for j, c in doc["coeffs"]}
    return PolySeq(schema, coeffs, k=doc.get("k"))
