import random
from fractions import Fraction

import numpy as np
import pytest

from nilcalc import nilgroup as ng
from nilcalc import nilseq as nq
from nilcalc.nilseq import SmoothingAtlas
from nilcalc.scalar import TorusPoint, signed_frac, tensor

F = Fraction


def _bracket_ab(a, b, n):
    return signed_frac(signed_frac(a * n) * b * n)


def test_unsmoothed_heisenberg_value():
    spec = nq.heisenberg_spec(F(2, 7), F(3, 5))
    v = nq.eval_nilchar(spec, 4)
    assert v.dim == 1 and v.amps == (1.0,)
    assert v.phases == (F(12, 35),)


def test_unsmoothed_heisenberg_matches_bracket_on_range():
    rng = random.Random(3)
    for _ in range(20):
        a = F(rng.randint(1, 999), rng.randint(1000, 5000))
        b = F(rng.randint(1, 999), rng.randint(1000, 5000))
        spec = nq.heisenberg_spec(a, b)
        for n in range(1, 60):
            v, flagged = nq.eval_nilchar_flagged(spec, n)
            if not flagged:
                assert v.phases[0] == _bracket_ab(a, b, n)


def test_boundary_points_are_flagged():
    spec = nq.heisenberg_spec(F(1, 2), F(1, 3))
    _, flagged = nq.eval_nilchar_flagged(spec, 1)
    assert flagged
    _, flagged = nq.eval_nilchar_flagged(spec, 2)
    assert not flagged


@pytest.mark.parametrize("radius", [F(1, 10), F(1, 8)])
def test_atlas_covers_and_normalizes(radius):
    for h in (1, 2):
        atlas = SmoothingAtlas.grid(tuple(range(h)), radius)
        rep = nq.verify_atlas(atlas, samples=2000)
        assert rep.ok, rep


def test_atlas_radius_bounds_and_gap():
    with pytest.raises(ValueError):
        SmoothingAtlas.grid((0,), F(1, 4))
    sparse = SmoothingAtlas((0,), ((F(0),), (F(1, 2),)), F(1, 10))
    rep = nq.verify_atlas(sparse, samples=100)
    assert not rep.ok and rep.failure == "coverage-gap"
    with pytest.raises(nq.CoverageError):
        sparse.weights([F(1, 4)])


def _catalog_specs():
    a, b = F(3, 11), F(5, 13)
    return [
        nq.heisenberg_spec(a, b),
        nq.heisenberg_spec(a, b, smoothed=True),
        nq.degrank32_spec(a, b),
        nq.degrank32_spec(a, b, smoothed=True),
        nq.appC_spec(a, b),
        nq.product_spec(nq.heisenberg_spec(a, b), nq.heisenberg_spec(b, a, smoothed=True)),
    ]


@pytest.mark.parametrize("idx", range(6))
def test_nilcharacters_have_unit_modulus(idx):
    spec = _catalog_specs()[idx]
    k = spec.orbit.k
    for n in range(-20, 40, 3):
        v = nq.eval_nilchar(spec, (n,) * k if k > 1 else n)
        assert abs(v.norm() - 1.0) < 1e-12


@pytest.mark.parametrize("idx", range(6))
def test_equivariance_under_vertical_shifts(idx):
    spec = _catalog_specs()[idx]
    assert nq.verify_equivariance(spec, trials=40).ok


def test_chart_representatives_differ_by_lattice_elements():
    h = ng.heisenberg()
    rng = random.Random(5)
    for _ in range(100):
        x = h.element([F(rng.randint(-300, 300), rng.randint(1, 31)) for _ in range(3)])
        c = [F(rng.randint(-4, 4), 10), F(rng.randint(-4, 4), 10), F(0)]
        r0, _ = ng.reduce_mod_lattice(x)
        r1, _ = ng.reduce_mod_lattice(x, center=c)
        gamma = h.mul(h.inverse(r0), r1)
        assert all(v.denominator == 1 for v in gamma.coords)


def test_constant_orbit_is_constant():
    h = ng.heisenberg()
    from nilcalc.polyseq import constant

    x = h.element([F(1, 3), F(2, 5), F(1, 7)])
    vertical = ng.VerticalChar.on(h, 2, {2: 1})
    for smoothed in (False, True):
        spec = nq.make_spec(constant(h, x), vertical, smoothed=smoothed)
        values = {nq.eval_nilchar(spec, n) for n in range(10)}
        assert len(values) == 1


def test_equivariance_examples():
    h = ng.heisenberg()
    spec = nq.heisenberg_spec(F(1, 3), F(1, 5), eta=1)
    x = h.element([F(1, 9), F(2, 9), F(1, 11)])
    c = h.basis_element(2, F(1, 3))
    before, _ = nq.eval_at(spec, x)
    after, _ = nq.eval_at(spec, h.mul(c, x))
    assert after == before.scale_phase(F(1, 3))
    zero = nq.heisenberg_spec(F(1, 3), F(1, 5), eta=0)
    assert nq.eval_at(zero, h.mul(c, x))[0] == nq.eval_at(zero, x)[0]
    wrong = ng.VerticalChar.on(h, 2, {2: 2})
    rep = nq.verify_equivariance(spec, trials=30, eta=wrong)
    assert not rep.ok and rep.failure == "vertical-frequency-mismatch"
    assert rep.data["max_discrepancy"] > 0.1


def test_linear_lift_examples():
    a, b, c = F(1, 7), F(1, 3), F(2, 11)
    assert nq.linear_lift_eval(a, b, c, 0) == TorusPoint(c)
    assert nq.linear_lift_eval(a, b, c, 1) == TorusPoint(a + b + c)
    assert nq.linear_lift_eval(F(1, 7), F(1, 3), 0, 6) == TorusPoint(0)
    right = nq.linear_lift_eval(a, b, c, 5, side="right")
    assert right == nq.linear_lift_closed_form(a, b, c, 5, side="right")
    with pytest.raises(ValueError):
        nq.linear_lift_eval(a, b, c, -1)


def test_linear_lift_matches_closed_form():
    rng = random.Random(11)
    for _ in range(10):
        a, b, c = (F(rng.randint(-50, 50), rng.randint(1, 200)) for _ in range(3))
        vals = list(nq.linear_lift_orbit(a, b, c, 60))
        assert vals == [nq.linear_lift_closed_form(a, b, c, n) for n in range(61)]


def test_product_spec_is_tensor_product():
    s1 = nq.heisenberg_spec(F(2, 7), F(3, 5), smoothed=True)
    s2 = nq.heisenberg_spec(F(1, 9), F(4, 13))
    p = nq.product_spec(s1, s2)
    assert p.dim == s1.dim * s2.dim
    for n in range(1, 30):
        got = nq.eval_nilchar(p, n)
        want = tensor(nq.eval_nilchar(s1, n), nq.eval_nilchar(s2, n))
        assert np.allclose(got.to_complex(), want.to_complex(), atol=1e-12)


def test_spec_serialization_roundtrip():
    import json

    specs = _catalog_specs()
    for spec in specs:
        back = nq.spec_from_dict(json.loads(json.dumps(nq.spec_to_dict(spec), default=str)))
        k = spec.orbit.k
        for n in range(1, 25):
            point = (n,) * k if k > 1 else n
            assert nq.eval_nilchar(back, point) == nq.eval_nilchar(spec, point)
