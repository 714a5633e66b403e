"""Gowers uniformity norms on [N] and related correlation statistics.

A function on [N] is zero-extended and embedded in Z/Ñ with Ñ >= 2^d N.  The
norm is the cyclic norm divided by the cyclic norm of the indicator of [N],
which makes it independent of Ñ.

Fast path: d = 1 is a mean, d = 2 is a fourth-power Fourier sum and d >= 3
recurses through multiplicative derivatives.  A shift h contributes exactly
zero whenever Δ_h f vanishes identically, so those shifts are skipped.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .scalar import PhaseVector, RationalLike, as_rational, expi, signed_frac, torus_norm


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values f(1), ..., f(N) in C^D, stored as an (N, D) complex array."""

    N: int
    values: np.ndarray
    sup_bound: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.N or v.shape[1] < 1:
            raise ValueError(f"values must have shape (N, D) with N={self.N}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        actual = float(np.max(np.linalg.norm(v, axis=1))) if self.N else 0.0
        if actual > self.sup_bound * (1 + 1e-12) + 1e-15:
            raise ValueError(f"sup norm {actual} exceeds recorded bound {self.sup_bound}")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def component(self, i: int) -> "SampledFunction":
        return SampledFunction(self.N, self.values[:, i], self.sup_bound)

    def __call__(self, n: int) -> np.ndarray:
        """f(n) for n in [1, N], zero elsewhere."""
        if 1 <= n <= self.N:
            return self.values[n - 1]
        return np.zeros(self.dim, dtype=complex)

    @classmethod
    def from_array(cls, values, sup_bound: Optional[float] = None) -> "SampledFunction":
        v = np.asarray(values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        bound = float(np.max(np.linalg.norm(v, axis=1))) if sup_bound is None else sup_bound
        return cls(v.shape[0], v, bound)

    @classmethod
    def from_phase_fn(cls, N: int, fn: Callable[[int], RationalLike]) -> "SampledFunction":
        """n -> e(fn(n)) with fn returning exact rationals."""
        return cls(N, np.array([expi(as_rational(fn(n))) for n in range(1, N + 1)]), 1.0)

    @classmethod
    def from_vectors(cls, vecs: Sequence[PhaseVector]) -> "SampledFunction":
        arr = np.array([v.to_complex() for v in vecs])
        bound = max(v.norm() for v in vecs) if vecs else 0.0
        return cls(len(vecs), arr, bound)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["n"]
        for i in range(1, self.dim + 1):
            header += [f"re{i}", f"im{i}"]
        w.writerow(header)
        for n in range(self.N):
            row = [n + 1]
            for z in self.values[n]:
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0].strip() != "n":
            raise ValueError("CSV must start with a header row beginning with 'n'")
        body = [r for r in rows[1:] if r]
        ns = [int(r[0]) for r in body]
        if ns != list(range(1, len(ns) + 1)):
            raise ValueError("CSV rows must list n = 1, 2, ..., N in order")
        D = (len(rows[0]) - 1) // 2
        arr = np.array([[complex(float(r[1 + 2 * i]), float(r[2 + 2 * i])) for i in range(D)] for r in body])
        return cls.from_array(arr.reshape(len(body), D))


def mult_derivative(f: SampledFunction, h: int) -> SampledFunction:
    """(Δ_h f)(n) = f(n + h) ⊗ conj f(n), zero-extended."""
    shifted = _shift(f.values, h)
    prod = np.einsum("ni,nj->nij", shifted, np.conj(f.values)).reshape(f.N, -1)
    return SampledFunction(f.N, prod, f.sup_bound ** 2)


def _shift(values: np.ndarray, t: int) -> np.ndarray:
    """Rows n -> values at n + t, zero outside [1, N]."""
    N = values.shape[0]
    out = np.zeros_like(values)
    lo, hi = max(0, -t), min(N, N - t)
    if lo < hi:
        out[lo:hi] = values[lo + t:hi + t]
    return out


# --------------------------------------------------------------------------
# cyclic norms


def _embed(values: np.ndarray, Ntilde: int) -> np.ndarray:
    out = np.zeros(Ntilde, dtype=complex)
    out[: len(values)] = values
    return out


def _power_u2_rows(rows: np.ndarray) -> np.ndarray:
    """‖row‖_{U^2}^4 on Z/M for each row."""
    M = rows.shape[-1]
    fh = np.fft.fft(rows, axis=-1) / M
    return np.sum(np.abs(fh) ** 4, axis=-1)


def _nonzero_shifts(a: np.ndarray) -> np.ndarray:
    """Shifts h for which Δ_h a is not identically zero."""
    M = len(a)
    supp = np.flatnonzero(a)
    if len(supp) == 0:
        return np.zeros(0, dtype=int)
    diffs = np.unique((supp[None, :] - supp[:, None]) % M) if len(supp) <= 4096 else np.arange(M)
    return diffs


def _compress(a: np.ndarray) -> Optional[Tuple[np.ndarray, int]]:
    """Re-embed a short interval-supported function in a smaller cyclic group.

    If the support of a sits in a non-wrapping interval of length L with
    2L <= M, every additive configuration counted on Z/M is a genuine integer
    configuration, so the raw count is the same on any Z/M' with M' >= 2L.
    """
    M = len(a)
    supp = np.flatnonzero(a)
    if len(supp) == 0:
        return None
    lo, hi = int(supp[0]), int(supp[-1]) + 1
    L = hi - lo
    Mp = 1 << max(1, (2 * L - 1).bit_length())
    if 2 * L > M or Mp >= M:
        return None
    out = np.zeros(Mp, dtype=complex)
    out[:L] = a[lo:hi]
    return out, Mp


def cyclic_power(a: np.ndarray, d: int) -> float:
    """‖a‖_{U^d(Z/M)}^{2^d} for a scalar function on Z/M."""
    if d < 1:
        raise ValueError("d must be at least 1")
    a = np.asarray(a, dtype=complex)
    M = len(a)
    if d == 1:
        return float(abs(np.mean(a)) ** 2)
    packed = _compress(a)
    if packed is not None:
        small, Mp = packed
        return cyclic_power(small, d) * (Mp / M) ** (d + 1)
    if d == 2:
        return float(_power_u2_rows(a[None, :])[0])
    hs = _nonzero_shifts(a)
    if len(hs) == 0:
        return 0.0
    if d == 3:
        idx = (np.arange(M)[None, :] + hs[:, None]) % M
        rows = a[idx] * np.conj(a)[None, :]
        return float(np.sum(_power_u2_rows(rows)) / M)
    terms = np.zeros(len(hs))
    for k, h in enumerate(hs):
        terms[k] = cyclic_power(np.roll(a, -int(h)) * np.conj(a), d - 1)
    return float(np.sum(terms) / M)


def cyclic_norm(a: np.ndarray, d: int) -> float:
    """‖a‖_{U^d(Z/M)} with no interval normalization."""
    return max(cyclic_power(a, d), 0.0) ** (1.0 / 2 ** d)


@lru_cache(maxsize=256)
def _indicator_power(N: int, d: int, Ntilde: int) -> float:
    return cyclic_power(_embed(np.ones(N), Ntilde), d)


def _check_args(f: SampledFunction, d: int, Ntilde: Optional[int]) -> int:
    if d < 1:
        raise ValueError("d must be at least 1")
    if Ntilde is None:
        return 2 ** d * f.N
    if Ntilde < 2 ** d * f.N:
        raise ValueError(f"Ntilde={Ntilde} is below 2^d N = {2 ** d * f.N}")
    return int(Ntilde)


def u_norm(f: SampledFunction, d: int, Ntilde: Optional[int] = None) -> float:
    """‖f‖_{U^d[N]}; vector-valued f uses (Σ_i ‖f_i‖^{2^d})^{1/2^d}."""
    M = _check_args(f, d, Ntilde)
    denom = _indicator_power(f.N, d, M)
    total = 0.0
    for i in range(f.dim):
        total += max(cyclic_power(_embed(f.values[:, i], M), d), 0.0) / denom
    return total ** (1.0 / 2 ** d)


def _naive_power(a: np.ndarray, d: int) -> complex:
    """Direct average over (x, h_1, ..., h_d) of the 2^d-fold product.

    Faces are paired along h_1, so each term is a product of 2^(d-1) values
    of b = Δ_{h_1} a.  Terms whose omega = 0 factor b(x) vanishes are
    skipped; every other term of the (d+1)-fold sum is visited.
    """
    M = len(a)
    ca = np.conj(a)
    rest = d - 1
    nv = min(rest, 2)  # trailing shifts handled by broadcasting
    vec = np.ix_(*([np.arange(M)] * (nv + 1)))[1:]
    total = 0j
    for h1 in range(M):
        cb = np.conj(np.roll(a, -h1) * ca)
        xs = np.flatnonzero(cb)
        if len(xs) == 0:
            continue
        x = xs.reshape((-1,) + (1,) * nv)
        b = np.conj(cb)
        for hs in itertools.product(range(M), repeat=rest - nv):
            prod = 1
            for omega in itertools.product((0, 1), repeat=rest):
                pos = x + sum(w * h for w, h in zip(omega, hs))
                for w, g in zip(omega[rest - nv:], vec):
                    if w:
                        pos = pos + g
                prod = prod * (b if sum(omega) % 2 else cb)[pos % M]
            total += np.sum(prod)
    return total / M ** (d + 1)


def naive_power(f: SampledFunction, d: int, Ntilde: Optional[int] = None, component: int = 0) -> complex:
    """The raw 2^d-fold average of one component on Z/Ñ, by direct summation."""
    M = _check_args(f, d, Ntilde)
    return _naive_power(_embed(f.values[:, component], M), d)


def u_norm_naive(f: SampledFunction, d: int, Ntilde: Optional[int] = None) -> float:
    """Reference implementation of :func:`u_norm` by direct summation."""
    M = _check_args(f, d, Ntilde)
    denom = _naive_power(_embed(np.ones(f.N), M), d).real
    total = 0.0
    for i in range(f.dim):
        total += max(_naive_power(_embed(f.values[:, i], M), d).real, 0.0) / denom
    return total ** (1.0 / 2 ** d)


# --------------------------------------------------------------------------
# correlations


def correlation(f: SampledFunction, g: SampledFunction) -> float:
    """Euclidean size of E_{n in [N]} f(n) ⊗ conj g(n)."""
    if f.N != g.N:
        raise ValueError("functions must share N")
    m = np.einsum("ni,nj->ij", f.values, np.conj(g.values)) / f.N
    return float(np.linalg.norm(m))


def gcs_statistic(chi: Mapping[int, SampledFunction], quad: Tuple[int, int, int, int]) -> float:
    """|E_n χ_{h1}(n) ⊗ χ_{h2}(n+t) ⊗ conj χ_{h3}(n) ⊗ conj χ_{h4}(n+t)|, t = h1 - h4."""
    h1, h2, h3, h4 = quad
    fs = [chi[h] for h in quad]
    N = fs[0].N
    if any(f.N != N for f in fs):
        raise ValueError("all four functions must share N")
    t = h1 - h4
    a = fs[0].values
    b = _shift(fs[1].values, t)
    c = np.conj(fs[2].values)
    e = np.conj(_shift(fs[3].values, t))
    m = np.einsum("ni,nj,nk,nl->ijkl", a, b, c, e) / N
    return float(np.linalg.norm(m.ravel()))


def quadratic_family(alpha: RationalLike, N: int, hs) -> dict:
    """χ_h(n) = e(2αhn + αh²), the derivatives of e(αn²)."""
    a = as_rational(alpha)
    return {h: SampledFunction.from_phase_fn(N, lambda n, h=h: 2 * a * h * n + a * h * h) for h in hs}


def gcs_quadruple_value(quad: Tuple[int, int, int, int], N: int) -> float:
    """Exact statistic for the quadratic family on a closed quadruple."""
    return 1.0 - abs(quad[0] - quad[3]) / N


def gcs_nonquadruple_bound(alpha: RationalLike, quad: Tuple[int, int, int, int], N: int) -> float:
    s = quad[0] + quad[1] - quad[2] - quad[3]
    dist = torus_norm(2 * as_rational(alpha) * s)
    if dist == 0:
        return float("inf")
    return float(1 / (N * dist)) + 2.0 / N


def geometric_mean_abs(theta: RationalLike, N: int) -> float:
    """|E_{n in [N]} e(θ n)| in closed form."""
    th = as_rational(theta)
    if torus_norm(th) == 0:
        return 1.0
    num = abs(math.sin(math.pi * float(signed_frac(N * th))))
    return num / (N * abs(math.sin(math.pi * float(signed_frac(th)))))


# random test functions used by the suites


def random_bounded(N: int, D: int, rng: np.random.Generator) -> SampledFunction:
    """Values uniform in the unit disc (componentwise), bound sqrt(D)."""
    r = np.sqrt(rng.random((N, D)))
    th = rng.random((N, D)) * 2 * np.pi
    return SampledFunction(N, r * np.exp(1j * th), float(np.sqrt(D)))


def random_phase_poly(degree: int, rng, max_den: int = 1000) -> Tuple[Fraction, ...]:
    """Random rational coefficients c_0..c_degree."""
    return tuple(
        Fraction(int(rng.integers(-max_den, max_den + 1)), int(rng.integers(1, max_den + 1)))
        for _ in range(degree + 1)
    )


def phase_poly_function(coeffs: Sequence[Fraction], N: int) -> SampledFunction:
    return SampledFunction.from_phase_fn(N, lambda n: sum(c * n ** i for i, c in enumerate(coeffs)))
