import math
import random
from fractions import Fraction

import pytest

from nilcalc import equid as eq
from nilcalc import nilgroup as ng
from nilcalc import nilseq as nq
from nilcalc.scalar import expi

F = Fraction


def test_weyl_sum_examples():
    assert eq.weyl_sum([0, F(1, 2)], 64) < 1e-12
    assert eq.weyl_sum([0, 0], 50) == pytest.approx(1.0)
    assert eq.weyl_sum([F(1, 3)], 50) == pytest.approx(1.0)
    assert eq.weyl_sum([0, F(89, 144)], 144) == pytest.approx(eq.geometric_weyl(F(89, 144), 144), abs=1e-12)
    assert eq.weyl_sum(lambda n: F(n, 4), 8) < 1e-12


def test_weyl_sum_against_closed_form():
    rng = random.Random(0)
    for _ in range(500):
        theta = F(rng.randint(-10 ** 5, 10 ** 5), rng.randint(1, 10 ** 5))
        N = rng.randint(1, 300)
        assert abs(eq.weyl_sum([0, theta], N) - eq.geometric_weyl(theta, N)) < 1e-9


def test_weyl_sum_along_an_orbit():
    a, b = F(2, 7), F(3, 5)
    g = nq.heisenberg_orbit(a, b)
    xi = ng.HorizontalChar(g.schema, (1, 2))
    direct = abs(sum(expi(a * n + 2 * b * n) for n in range(1, 101))) / 100
    assert eq.weyl_sum((g, xi), 100) == pytest.approx(direct, abs=1e-12)


def test_character_polynomial_is_exact():
    rng = random.Random(1)
    from nilcalc.polyseq import random_polyseq

    for ref in ("heisenberg", "free2step(3)", "heisenberg_degrank32", "universal(2;3,3)"):
        s = ng.schema_from_ref(ref)
        g = random_polyseq(s, rng)
        xi = ng.HorizontalChar(s, tuple(rng.randint(-3, 3) for _ in s.horizontal_positions))
        cs = eq.character_polynomial(g, xi)
        for n in range(-5, 12):
            assert eq.eval_binomial(cs, n) == xi.value(g(n))


def test_height_ordering():
    assert list(eq.height_ordered(1, 3)) == [(1,), (2,), (3,)]
    assert list(eq.height_ordered(2, 1)) == [(0, 1), (1, -1), (1, 0), (1, 1)]
    vs = list(eq.height_ordered(3, 2))
    assert len(vs) == (5 ** 3 - 1) // 2
    assert len(set(vs)) == len(vs) and not any(tuple(-c for c in v) in set(vs) for v in vs)


def test_smoothness_examples():
    assert eq.smoothness([0, F(1, 3)], 100) == F(1, 3)
    assert eq.smoothness([0, 3], 100) == 0
    # binomial basis: n(n-1)/2 * (1/1000) increments by (n)/1000
    assert eq.smoothness([0, 0, F(1, 1000)], 10) == F(9, 1000)


def test_leibman_examples():
    rep = eq.leibman_test(eq.torus_orbit([[0, F(1, 3)]]), 1000, H=5, C=1)
    assert rep.obstructed and rep.witness.coeffs == (3,) and rep.smoothness == 0
    rep = eq.leibman_test(eq.torus_orbit([[0, F(3501, 7000)]]), 1000, H=5, C=1)
    assert rep.obstructed and rep.witness.coeffs == (2,) and rep.smoothness == F(1, 3500)
    rep = eq.leibman_test(nq.heisenberg_orbit(F(1, 2), F(1, 5)), 100, H=5, C=1)
    assert rep.obstructed and rep.witness.coeffs == (2, 0) and rep.searched == 10
    rep = eq.leibman_test(nq.heisenberg_orbit(F(123457, 10 ** 6 + 3), F(777781, 10 ** 6 + 33)), 1000, H=3, C=1)
    assert not rep.obstructed and rep.searched == (7 ** 2 - 1) // 2
    assert rep.to_dict()["witness"] is None


def test_leibman_needs_one_dimensional_domain_and_caps_generators():
    with pytest.raises(ValueError):
        eq.leibman_test(nq.appC_orbit(F(1, 3), F(1, 5)), 100)
    with pytest.raises(ValueError):
        eq.leibman_test(eq.torus_orbit([[0, F(1, k + 2)] for k in range(eq.MAX_GENERATORS + 1)]), 100, H=1)


def test_empirical_examples():
    g = eq.torus_orbit([[0, F(1, 3)]])
    rep = eq.empirical_distribution_test(g, 300, char_height=3)
    assert rep.data["max_average"] == pytest.approx(1.0)
    assert rep.data["character"]["coeffs"] == [3]
    h = ng.heisenberg()
    from nilcalc.polyseq import constant

    rep = eq.empirical_distribution_test(constant(h, h.element([F(1, 3), F(1, 5), F(1, 7)])), 50, 2)
    assert rep.data["max_average"] == pytest.approx(1.0)
    assert not eq.empirical_distribution_test(g, 300, 3, threshold=0.5).ok


def test_vertical_positions():
    assert eq.vertical_positions(ng.heisenberg()) == (2,)
    assert eq.vertical_positions(ng.free2step(3)) == (3, 4, 5)
    assert eq.vertical_positions(ng.torus(2, 1)) == ()


def test_generic_heisenberg_orbit_looks_equidistributed():
    rng = random.Random(2)
    N = 2048
    a, b = eq.generic_frequency(rng, N), eq.generic_frequency(rng, N)
    rep = eq.empirical_distribution_test(nq.heisenberg_orbit(a, b), N, 2, threshold=0.15)
    assert rep.ok, rep.data


def test_generic_frequency_properties():
    rng = random.Random(3)
    for N in (100, 1000):
        a = eq.generic_frequency(rng, N, Q0=8)
        assert a.denominator > N ** 2
        assert all(abs(q * a - round(q * a)) > F(8, N) for q in range(1, 9))


def _consistency_cases():
    rng = random.Random(20)
    cases = []
    for i in range(20):
        C = [1, 2, 4][i % 3]
        H = [2, 3][i % 2]
        N = 64 * C * (1 + i % 4)
        q = rng.randint(2, H)
        small = F(rng.randint(-C, C), 2 * N * q)
        a = F(rng.randint(0, q - 1), q) + small
        b = F(rng.randint(1, 10 ** 5), 10 ** 5 + 3)
        cases.append((nq.heisenberg_orbit(a, b), N, H, C))
    return cases


@pytest.mark.parametrize("case", range(20))
def test_obstruction_implies_a_biased_average(case):
    g, N, H, C = _consistency_cases()[case]
    rep = eq.leibman_test(g, N, H, C)
    assert rep.obstructed
    M = N // (4 * C)
    emp = eq.empirical_distribution_test(g, N, char_height=H, window=M)
    assert emp.data["max_average"] >= 0.25


def _torus_cases():
    rng = random.Random(50)
    out = []
    for i in range(50):
        kind = i % 3
        N = 1000
        if kind == 0:
            q = rng.randint(1, 5)
            out.append(([[0, F(rng.randint(0, q - 1), q)]], True))
        elif kind == 1:
            out.append(([[0, eq.generic_frequency(rng, N, 1, 16)]], False))
        else:
            a = eq.generic_frequency(rng, N, 1, 16)
            k = rng.randint(1, 3)
            out.append(([[0, a], [0, k * a + F(rng.randint(-1, 1), 10 * N)]], True))
    return out


@pytest.mark.parametrize("case", range(50))
def test_torus_weyl_condition(case):
    rows, obstructed = _torus_cases()[case]
    rep = eq.leibman_test(eq.torus_orbit(rows), 1000, H=5, C=1)
    assert rep.obstructed == obstructed
    if obstructed:
        assert rep.smoothness <= F(1, 1000)
        vals = [r[1] for r in rows]
        assert abs(sum(k * v for k, v in zip(rep.witness.coeffs, vals)) - round(
            sum(k * v for k, v in zip(rep.witness.coeffs, vals)))) <= F(1, 1000)


def test_obstruction_report_serializes():
    rep = eq.leibman_test(eq.torus_orbit([[0, F(1, 3)]]), 100, 4, 1)
    d = rep.to_dict()
    assert d["verdict"] == eq.OBSTRUCTION and d["witness"] == [3] and d["searched"] == 3
    assert math.isfinite(float(d["smoothness"]))
