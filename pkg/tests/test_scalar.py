import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilcalc.scalar import (
    PhaseVector,
    TorusPoint,
    as_rational,
    conj,
    expi,
    format_rational,
    nearest_int,
    phase,
    signed_frac,
    tensor,
    torus_dist,
    torus_norm,
)

rationals = st.fractions(max_denominator=10**6).filter(lambda x: abs(x) < 10**6)


@pytest.mark.parametrize(
    "x, want",
    [("3/4", "-1/4"), ("1/2", "1/2"), ("-1/2", "1/2"), ("0", "0"), ("7/3", "1/3"), ("-5/4", "-1/4")],
)
def test_signed_frac_examples(x, want):
    assert signed_frac(Fraction(x)) == Fraction(want)


@given(rationals)
def test_signed_frac_range_and_idempotence(x):
    y = signed_frac(x)
    assert Fraction(-1, 2) < y <= Fraction(1, 2)
    assert (x - y).denominator == 1
    assert signed_frac(y) == y
    assert x - nearest_int(x) == y


@pytest.mark.parametrize("x, y, want", [(0, 1, 0), ("1/4", "3/4", "1/2"), ("1/10", "9/10", "1/5")])
def test_torus_dist_examples(x, y, want):
    assert torus_dist(as_rational(x), as_rational(y)) == Fraction(want)


def test_torus_dist_triangle_inequality():
    rng = random.Random(7)
    for _ in range(1000):
        x, y, z = (Fraction(rng.randint(-10**4, 10**4), rng.randint(1, 997)) for _ in range(3))
        assert torus_dist(x, z) <= torus_dist(x, y) + torus_dist(y, z)
        assert 0 <= torus_dist(x, y) <= Fraction(1, 2)


def test_torus_point_canonical():
    p = TorusPoint(Fraction(7, 4))
    assert p.value == Fraction(-1, 4)
    assert p == TorusPoint(Fraction(-1, 4))
    assert (p + Fraction(1, 4)).value == 0
    assert (p * 2).value == Fraction(1, 2)
    assert torus_norm(p) == Fraction(1, 4)


@pytest.mark.parametrize("x, want", [(0, 1), ("1/2", -1), ("1/4", 1j), ("-1/4", -1j)])
def test_phase_examples(x, want):
    v = phase(as_rational(x))
    assert v.dim == 1 and v.unimodular
    assert v.to_complex()[0] == want


def test_phase_float_rendering():
    z = phase(Fraction(1, 3)).to_complex()[0]
    assert abs(z - complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))) < 1e-15


@given(rationals, rationals)
def test_phases_add_exactly(x, y):
    assert tensor(phase(x), phase(y)) == phase(x + y)


def test_tensor_examples():
    v = PhaseVector.unit([Fraction(1, 3), Fraction(1, 5)])
    assert tensor(phase(0), v) == v
    assert tensor(phase(Fraction(1, 4)), phase(Fraction(1, 4))).to_complex()[0] == -1
    u = phase(Fraction(2, 7))
    assert tensor(conj(u), u) == phase(0)


def test_tensor_row_major_order():
    u = PhaseVector((1.0, 0.5), (Fraction(1, 3), Fraction(1, 7)))
    v = PhaseVector((0.25, 1.0, 2.0), (0, Fraction(1, 2), Fraction(1, 5)))
    t = tensor(u, v)
    assert t.dim == 6
    expect = np.kron(u.to_complex(), v.to_complex())
    assert np.allclose(t.to_complex(), expect, atol=1e-15)


@given(
    st.lists(st.tuples(st.floats(0, 3), rationals), min_size=1, max_size=4),
    st.lists(st.tuples(st.floats(0, 3), rationals), min_size=1, max_size=4),
)
def test_tensor_norm_multiplicative(a, b):
    u = PhaseVector(tuple(x for x, _ in a), tuple(p for _, p in a))
    v = PhaseVector(tuple(x for x, _ in b), tuple(p for _, p in b))
    assert abs(tensor(u, v).norm() - u.norm() * v.norm()) <= 1e-12 * max(1.0, u.norm() * v.norm())


def test_tensor_bilinear():
    rng = np.random.default_rng(3)
    for _ in range(50):
        u1, u2, v = (
            PhaseVector(tuple(rng.random(3)), tuple(Fraction(int(k), 97) for k in rng.integers(0, 97, 3)))
            for _ in range(3)
        )
        lhs = np.kron(u1.to_complex() + u2.to_complex(), v.to_complex())
        rhs = tensor(u1, v).to_complex() + tensor(u2, v).to_complex()
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_conjugation_negates_phases():
    v = PhaseVector((1.0, 0.5), (Fraction(1, 3), Fraction(-1, 8)))
    assert conj(v).phases == (Fraction(-1, 3), Fraction(1, 8))
    assert conj(conj(v)) == v


def test_negative_amplitude_is_normalized():
    assert PhaseVector((-1.0,), (0,)) == phase(Fraction(1, 2))


def test_expi_reduces_exactly():
    assert expi(Fraction(10**12 + 1, 4)) == 1j


def test_rational_parsing_and_formatting():
    assert as_rational("6/8") == Fraction(3, 4)
    assert as_rational(5) == 5
    assert format_rational(Fraction(-3, 4)) == "-3/4"
    assert format_rational(Fraction(4, 2)) == "2"
    with pytest.raises(TypeError):
        as_rational(0.5)
    with pytest.raises(TypeError):
        as_rational(True)
