import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apwave import trig
from apwave.freqset import GeneratorBasis, Kind, ModeId, even_periodic_pair, interleaved_pair, \
    two_generator_pair
from apwave.trig import TrigSum

from oracles import long_window_mean

SQ5 = math.sqrt(5.0)
B1 = GeneratorBasis((1.0,), 40, 40.0)
B2 = GeneratorBasis((1.0, SQ5), 8, 30.0)
XS = np.linspace(-20.0, 20.0, 2001)


def cos1(k, a=1.0, basis=B1):
    return TrigSum.from_terms(basis, cos={(k,): a})


def sin1(k, b=1.0, basis=B1):
    return TrigSum.from_terms(basis, sin={(k,): b})


def test_add_scale_examples():
    c = cos1(1)
    assert trig.add(c, c).cos == {(1,): 2.0}
    assert trig.scale(0.0, c + 3.0).is_zero()
    assert trig.add(c, trig.scale(-1.0, c)).is_zero()


def test_basis_mismatch():
    with pytest.raises(ValueError):
        trig.add(cos1(1), TrigSum.constant(B2, 1.0))


def test_mul_double_angle():
    p = trig.mul(cos1(3), cos1(3))
    assert p.mean == pytest.approx(0.5)
    assert p.cos == pytest.approx({(6,): 0.5})
    assert not p.sin


def test_mul_sin_squared_interleaved():
    pair = interleaved_pair(10.5)
    s = TrigSum.from_terms(pair.basis, sin={(1,): 1.0})
    p = trig.mul(s, s)
    assert p.mean == pytest.approx(0.5)
    assert p.cos == pytest.approx({(2,): -0.5})
    assert [m.kind for m in p.support()] == [Kind.COS]
    assert trig.project_E0(p, pair)[0].cos == pytest.approx({(2,): -0.5})


def test_mul_cos2_sin1():
    # cos 2x sin x = (sin 3x - sin x) / 2
    p = trig.mul(cos1(2), sin1(1))
    assert p.sin == pytest.approx({(1,): -0.5, (3,): 0.5})
    assert np.max(np.abs(trig.eval_grid(p, XS) - np.cos(2 * XS) * np.sin(XS))) <= 1e-12


def test_mul_truncation_receipt():
    u = cos1(3) + cos1(1)
    full = trig.mul(u, u)
    cut = trig.mul(u, u, cutoff=4.5)
    assert (6,) not in cut.cos and (6,) in full.cos
    assert cut.truncation == pytest.approx(math.sqrt(0.5 * full.cos[(6,)] ** 2))
    assert full.truncation == 0.0


def test_derivative_examples():
    d = trig.derivative(cos1(2, 1.5))
    assert d.sin == pytest.approx({(2,): -3.0})
    assert trig.derivative(TrigSum.constant(B1, 4.0)).is_zero()
    sq = trig.mul(trig.derivative(cos1(1)), trig.derivative(cos1(1)))
    assert sq.mean == pytest.approx(0.5) and sq.cos == pytest.approx({(2,): -0.5})


def test_mean_and_inner_examples():
    assert trig.mean(cos1(1) + 5.0) == 5.0
    assert trig.mean(sin1(1)) == 0.0
    assert trig.mean(trig.mul(cos1(1), cos1(1))) == pytest.approx(0.5)
    assert trig.inner(cos1(4), cos1(4)) == 0.5
    assert trig.inner(cos1(4), sin1(4)) == 0.0
    one = TrigSum.constant(B1, 1.0)
    assert trig.inner(one, one) == 1.0


def test_eval_examples():
    assert trig.eval(cos1(1) + 1.0, 0.0) == 2.0
    assert trig.eval(sin1(1), 0.0) == 0.0


def test_project_e0_examples():
    pair = interleaved_pair(10.5)
    u = TrigSum.from_terms(pair.basis, 3.0, cos={(2,): 1.0})
    proj, defect = trig.project_E0(u, pair)
    assert proj.cos == {(2,): 1.0} and proj.mean == 0 and defect == 3.0

    pair2 = two_generator_pair()
    v = TrigSum.from_terms(pair2.basis, sin={(1, 0): 0.7})
    proj, defect = trig.project_E0(v, pair2)
    assert proj.is_zero() and defect == pytest.approx(0.7 * math.sqrt(0.5))

    w = TrigSum.from_terms(pair2.basis, cos={(0, 2): 0.2}, sin={(1, 1): 0.1})
    proj, defect = trig.project_E0(w, pair2)
    assert proj == w and defect == 0.0


def test_galerkin_project():
    u = cos1(1) + cos1(2) + 1.0
    kept, lost = trig.galerkin_project(u, [ModeId((0,), Kind.MEAN), ModeId((1,), Kind.COS)])
    assert kept.cos == {(1,): 1.0} and kept.mean == 1.0
    assert lost == pytest.approx(math.sqrt(0.5))
    kept, lost = trig.galerkin_project(u, [ModeId((1,), Kind.COS)])
    assert kept.mean == 0.0 and lost == pytest.approx(math.sqrt(1.5))


def test_canonical_drops_tiny_and_folds():
    u = TrigSum.from_terms(B2, cos={(1, -1): 2.0, (2, 0): 1e-16}, sin={(1, -1): 1.0})
    assert u.cos == {(-1, 1): 2.0}
    assert u.sin == {(-1, 1): -1.0}


def test_serialization_roundtrip_and_stable():
    u = TrigSum.from_terms(B2, 0.25, cos={(0, 2): 0.1, (2, 0): -0.3}, sin={(1, 1): 0.05})
    d = trig.to_dict(u)
    assert trig.from_dict(B2, json.loads(json.dumps(d))) == u
    freqs = [sum(c * g for c, g in zip(t["coeffs"], B2.generators)) for t in d["terms"]]
    assert freqs == sorted(freqs)
    assert json.dumps(trig.to_dict(u)) == json.dumps(d)


def test_coefficients_roundtrip():
    pair = two_generator_pair()
    from apwave.freqset import enumerate_modes
    modes = enumerate_modes(pair)
    vals = np.linspace(0.1, 1.0, len(modes))
    u = trig.from_coefficients(pair.basis, modes, vals)
    assert np.allclose(trig.coefficients(u, modes), vals)


# -- properties -----------------------------------------------------------------

small_vec = st.tuples(st.integers(-3, 3), st.integers(-3, 3)).filter(any)
coef = st.floats(-2, 2, allow_nan=False).filter(lambda x: abs(x) > 1e-6)


@st.composite
def sparse_sums(draw, basis=B2):
    cos = draw(st.dictionaries(small_vec, coef, max_size=4))
    sin = draw(st.dictionaries(small_vec, coef, max_size=4))
    mean = draw(st.floats(-2, 2, allow_nan=False))
    return TrigSum.from_terms(basis, mean, cos, sin)


@settings(max_examples=60, deadline=None)
@given(sparse_sums(), sparse_sums())
def test_product_matches_pointwise(u, v):
    p = trig.mul(u, v)
    ref = trig.eval_grid(u, XS) * trig.eval_grid(v, XS)
    assert np.max(np.abs(trig.eval_grid(p, XS) - ref)) <= 1e-11
    assert p.truncation == 0.0


@settings(max_examples=40, deadline=None)
@given(sparse_sums(), sparse_sums(), sparse_sums())
def test_ring_laws(u, v, w):
    assert trig.max_abs_diff(trig.mul(u, v), trig.mul(v, u)) <= 1e-12
    lhs = trig.mul(trig.mul(u, v), w)
    rhs = trig.mul(u, trig.mul(v, w))
    assert np.max(np.abs(trig.eval_grid(lhs, XS) - trig.eval_grid(rhs, XS))) <= 1e-10
    dist = trig.mul(u, v + w)
    assert trig.max_abs_diff(dist, trig.mul(u, v) + trig.mul(u, w)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(sparse_sums(), sparse_sums())
def test_leibniz_rule(u, v):
    lhs = trig.derivative(trig.mul(u, v))
    rhs = trig.mul(trig.derivative(u), v) + trig.mul(u, trig.derivative(v))
    assert np.max(np.abs(trig.eval_grid(lhs, XS) - trig.eval_grid(rhs, XS))) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(sparse_sums(), st.floats(-3, 3, allow_nan=False))
def test_derivative_linear(u, c):
    assert trig.max_abs_diff(trig.derivative(c * u), c * trig.derivative(u)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(sparse_sums())
def test_parseval_formula(u):
    ref = u.mean ** 2 + 0.5 * sum(a * a for a in u.cos.values()) + 0.5 * sum(b * b for b in u.sin.values())
    assert trig.norm_b2(u) ** 2 == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_parseval_long_window_quadrature():
    u = TrigSum.from_terms(B2, 0.3, cos={(0, 1): 0.8, (1, 1): -0.4}, sin={(-1, 1): 0.5, (2, 0): 0.2})
    fmax = max(u.freq(m.vec) for m in u.support())
    q = long_window_mean(lambda x: trig.eval_grid(u, x) ** 2, 1e5, fmax)
    assert q == pytest.approx(trig.norm_b2(u) ** 2, rel=1e-3)


def test_e_closure_has_no_excluded_mass():
    pair = two_generator_pair(1.0, SQ5, 6, 20.0)
    from apwave.freqset import enumerate_modes
    modes = enumerate_modes(pair)[1:8]
    u = trig.from_coefficients(pair.basis, modes, np.linspace(0.3, 1.0, len(modes)))
    v = trig.from_coefficients(pair.basis, modes[::-1], np.linspace(-1.0, 0.5, len(modes)))
    p = trig.mul(u, v)
    proj, defect = trig.project_E0(p, pair)
    assert defect == pytest.approx(abs(p.mean), abs=1e-15)


def test_even_pair_products_stay_even():
    pair = even_periodic_pair(10.5)
    u = TrigSum.from_terms(pair.basis, cos={(1,): 0.3, (4,): -0.1})
    assert not trig.mul(trig.mul(u, u), u).sin
