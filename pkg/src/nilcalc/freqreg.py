"""Bounded-height frequency regularization.

``find_relation`` looks for a short integer relation a . xs = O(eps) mod 1 by
exhaustive search.  ``regularize`` repeatedly solves such relations, splitting
the inputs into an independent part, a rational part and a small part.  Every
input is an exact integer combination of the outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._report import Report
from .scalar import RationalLike, TorusPoint, as_rational, format_rational, signed_frac, torus_norm

MAX_LENGTH = 8
_CHUNK = 1 << 18
DEFAULT_H = 10
DEFAULT_Q = 64


def _val(x) -> Fraction:
    return x.value if isinstance(x, TorusPoint) else signed_frac(as_rational(x))


def find_relation(xs: Sequence, eps: RationalLike, H: int) -> Optional[Tuple[int, ...]]:
    """First nonzero a with |a|_inf <= H and ||a . xs|| <= eps, or None.

    Candidates are visited by sup-norm, then lexicographically, keeping only
    vectors whose first nonzero entry is positive.
    """
    vals = [_val(x) for x in xs]
    l = len(vals)
    if l > MAX_LENGTH:
        raise ValueError(f"relation search is capped at {MAX_LENGTH} frequencies, got {l}")
    if l == 0 or H < 1:
        return None
    eps = as_rational(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    L = math.lcm(eps.denominator, *(v.denominator for v in vals))
    r = [int((v * L) % L) for v in vals]
    E = int(eps * L)
    safe = H * l * L < 2 ** 62
    dtype = np.int64 if safe else object
    rv = np.array(r, dtype=dtype)
    for h in range(1, H + 1):
        base = 2 * h + 1
        total = base ** l
        for start in range(0, total, _CHUNK):
            idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
            digits = np.empty((len(idx), l), dtype=np.int64)
            rest = idx.copy()
            for i in range(l - 1, -1, -1):
                digits[:, i] = rest % base
                rest //= base
            v = digits - h
            av = np.abs(v)
            keep = av.max(axis=1) == h
            nz = v != 0
            first = v[np.arange(len(v)), np.argmax(nz, axis=1)]
            keep &= first > 0
            if not keep.any():
                continue
            cand = v[keep]
            dot = (cand.astype(dtype) @ rv) % L if safe else np.array(
                [sum(int(a) * b for a, b in zip(row, r)) % L for row in cand], dtype=object)
            dot = np.asarray(dot)
            dist = np.minimum(dot, L - dot)
            hits = np.flatnonzero(dist <= E)
            if len(hits):
                return tuple(int(a) for a in cand[hits[0]])
    return None


def relation_residue(xs: Sequence, a: Sequence[int]) -> Fraction:
    """Signed residue of a . xs in (-1/2, 1/2]."""
    return signed_frac(sum((k * _val(x) for k, x in zip(a, xs)), Fraction(0)))


@dataclass
class FrequencyDecomposition:
    inputs: Tuple[TorusPoint, ...]
    independent: Tuple[TorusPoint, ...]
    rational: Tuple[TorusPoint, ...]
    small: Tuple[TorusPoint, ...]
    representation: Tuple[Tuple[int, ...], ...]  # one row per input over independent + rational + small
    eps: Fraction
    H: int
    Q: int
    steps: int = 0
    max_rational_denominator: int = 1
    relations: Tuple[Tuple[int, ...], ...] = field(default_factory=tuple)

    @property
    def outputs(self) -> Tuple[TorusPoint, ...]:
        return self.independent + self.rational + self.small

    def combination(self, i: int) -> TorusPoint:
        out = TorusPoint(0)
        for c, y in zip(self.representation[i], self.outputs):
            if c:
                out = out + y * c
        return out

    def verify(self) -> Report:
        for i, x in enumerate(self.inputs):
            got = self.combination(i)
            if got != x:
                return Report.failed("freqreg", "representation", {"input": i, "value": x, "combination": got})
        for s in self.small:
            if torus_norm(s) > self.eps:
                return Report.failed("freqreg", "small output too large", s)
        if find_relation(self.independent, self.eps, self.H) is not None:
            return Report.failed("freqreg", "independence", find_relation(self.independent, self.eps, self.H))
        return Report.passed("freqreg", n_independent=len(self.independent),
                             n_rational=len(self.rational), n_small=len(self.small))

    def to_dict(self) -> dict:
        fmt = lambda ps: [format_rational(p.value) for p in ps]  # noqa: E731
        return {
            "inputs": fmt(self.inputs),
            "independent": fmt(self.independent),
            "rational": fmt(self.rational),
            "small": fmt(self.small),
            "representation": [list(r) for r in self.representation],
            "eps": format_rational(self.eps),
            "H": self.H,
            "Q": self.Q,
            "steps": self.steps,
            "max_rational_denominator": self.max_rational_denominator,
        }


def regularize(
    xs: Iterable,
    eps: RationalLike = 0,
    H: int = DEFAULT_H,
    Q: int = DEFAULT_Q,
) -> FrequencyDecomposition:
    """Split xs into independent, rational and small frequencies.

    Each step takes the first relation a . I = delta (mod 1) on the current
    independent list I, solves it for the entry p with the smallest |a_p|
    (made positive), replaces every other entry x_i by x_i / a_p (the I_0
    representative divided as a rational) and splits the leftover
    x_p + sum a_i x_i / a_p into a rational part of denominator | a_p and an
    eps-small part.  Entries that are exactly rational with denominator <= Q
    are moved to the rational list directly.
    """
    inputs = tuple(x if isinstance(x, TorusPoint) else TorusPoint(x) for x in xs)
    if len(inputs) > MAX_LENGTH:
        raise ValueError(f"regularize is capped at {MAX_LENGTH} frequencies, got {len(inputs)}")
    eps = as_rational(eps)
    cur: List[Fraction] = [x.value for x in inputs]
    rational: List[Fraction] = []
    small: List[Fraction] = []
    # rows: input -> (coeffs over cur, coeffs over rational, coeffs over small)
    rows = [([1 if j == i else 0 for j in range(len(cur))], [], []) for i in range(len(cur))]
    steps = 0
    relations = []
    max_den = 1

    def extend(row):
        ci, cr, cs = row
        return ci, cr + [0] * (len(rational) - len(cr)), cs + [0] * (len(small) - len(cs))

    while True:
        # exact rationals of small height leave the independent list at once
        moved = [i for i, v in enumerate(cur) if v.denominator <= Q]
        if moved:
            keep = [i for i in range(len(cur)) if i not in moved]
            for i in moved:
                if cur[i] != 0:
                    rational.append(cur[i])
                    max_den = max(max_den, cur[i].denominator)
            new_rows = []
            for row in rows:
                ci, cr, cs = extend(row)
                add_r = [ci[i] for i in moved if cur[i] != 0]
                cr = cr[: len(rational) - len(add_r)] + add_r
                new_rows.append(([ci[i] for i in keep], cr, cs))
            rows = new_rows
            cur = [cur[i] for i in keep]
            continue
        a = find_relation(cur, eps, H)
        if a is None:
            break
        steps += 1
        relations.append(a)
        p = min((i for i in range(len(a)) if a[i]), key=lambda i: (abs(a[i]), i))
        if a[p] < 0:
            a = tuple(-c for c in a)
        ap = a[p]
        others = [i for i in range(len(cur)) if i != p]
        new_cur = [Fraction(signed_frac(cur[i]), ap) for i in others]
        u = cur[p] + sum((a[i] * nc for i, nc in zip(others, new_cur)), Fraction(0))
        v = signed_frac(ap * u)
        if abs(v) > eps:
            raise AssertionError("relation residue exceeds eps")
        s_part = Fraction(v, ap)
        q_part = signed_frac(u - s_part)
        if (ap * q_part).denominator != 1:
            raise AssertionError("rational part is not killed by a_p")
        # old cur_i = ap * new_i (i != p); old cur_p = q + s - sum a_i new_i
        if q_part != 0:
            rational.append(q_part)
            max_den = max(max_den, q_part.denominator)
        if s_part != 0:
            small.append(s_part)
        new_rows = []
        for row in rows:
            ci, cr, cs = row
            cr = cr + [0] * (len(rational) - len(cr))
            cs = cs + [0] * (len(small) - len(cs))
            cp = ci[p]
            nci = [ap * ci[i] - cp * a[i] for i in others]
            if q_part != 0:
                cr[-1] += cp
            if s_part != 0:
                cs[-1] += cp
            new_rows.append((nci, cr, cs))
        if len(new_cur) >= len(cur):
            raise AssertionError("independent list did not shrink")
        rows = new_rows
        cur = new_cur
    rows = [extend(r) for r in rows]
    rep = tuple(tuple(ci + cr + cs) for ci, cr, cs in rows)
    return FrequencyDecomposition(
        inputs=inputs,
        independent=tuple(TorusPoint(v) for v in cur),
        rational=tuple(TorusPoint(v) for v in rational),
        small=tuple(TorusPoint(v) for v in small),
        representation=rep,
        eps=eps,
        H=H,
        Q=Q,
        steps=steps,
        max_rational_denominator=max_den,
        relations=tuple(relations),
    )


def parse_freqs(text: str) -> List[TorusPoint]:
    return [TorusPoint(as_rational(t.strip())) for t in text.split(",") if t.strip()]


def suite_cases(n: int = 30, seed: int = 0) -> List[Tuple[List[Fraction], Fraction, int, int]]:
    """Deterministic regularization suite: (frequencies, eps, H, Q) tuples.

    Cases mix generic frequencies, planted integer relations, rational shifts
    and eps-small perturbations.
    """
    import random

    rng = random.Random(seed)

    def generic():
        den = rng.randint(10 ** 6, 10 ** 7)
        return Fraction(rng.randint(1, den - 1), den)

    cases = []
    for c in range(n):
        eps = [Fraction(0), Fraction(1, 10 ** 4), Fraction(1, 10 ** 3)][c % 3]
        H = [3, 5, 10][(c // 3) % 3]
        Q = [16, 64][c % 2]
        base = [generic() for _ in range(1 + c % 3)]
        xs = list(base)
        extra = 1 + (c % 4)
        for _ in range(extra):
            kind = rng.choice(["combo", "rational", "small", "shift", "generic"])
            if kind == "combo":
                coeffs = [rng.randint(-3, 3) for _ in base]
                xs.append(sum((k * b for k, b in zip(coeffs, base)), Fraction(0)))
            elif kind == "rational":
                xs.append(Fraction(rng.randint(1, 40), rng.randint(2, 40)))
            elif kind == "small":
                xs.append(Fraction(rng.randint(-9, 9), 10 ** 6 + rng.randint(1, 100)))
            elif kind == "shift":
                xs.append(rng.choice(base) * rng.randint(1, 3) + Fraction(1, rng.randint(2, 6)))
            else:
                xs.append(generic())
        xs = xs[:6]
        if H >= 10 and len(xs) > 4:
            xs = xs[:4]
        cases.append((xs, eps, H, Q))
    return cases
