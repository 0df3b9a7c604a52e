import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slabadjoint.bvp import Grid
from slabadjoint.model import analytic_response, nominal_parameters
from slabadjoint.pipeline import analyze_detector
from slabadjoint.sensitivities import (
    CLOSED_FORM,
    QUADRATURE,
    SYMMETRY_PAIRS,
    SensitivityMatrix,
    SensitivityVector,
    closed_form_routes,
    first_order_closed_form,
    second_order_closed_form,
    sensitivity_units,
    to_relative,
)


def mp_response(p):
    a, b = mp.mpf(p.half_thickness_a), mp.mpf(p.detector_b)

    def r(sa, d, q, sd):
        k = mp.sqrt(sa / d)
        return q * sd / sa * (1 - mp.cosh(b * k) / mp.cosh(a * k))
    return r


def mp_derivatives(p):
    """Gradient and Hessian of R by 40-digit numerical differentiation."""
    with mp.workdps(40):
        r = mp_response(p)
        x = [mp.mpf(v) for v in p.alpha]
        g = np.empty(4)
        H = np.empty((4, 4))
        for i in range(4):
            order = [0] * 4
            order[i] = 1
            g[i] = float(mp.diff(r, x, tuple(order)))
            for j in range(i, 4):
                order = [0] * 4
                order[i] += 1
                order[j] += 1
                H[i, j] = H[j, i] = float(mp.diff(r, x, tuple(order)))
    return g, H


@pytest.mark.parametrize("b", [10.0, 40.0, 49.5, -25.0, 0.0])
def test_closed_form_against_high_precision(b):
    p = nominal_parameters(b)
    g, H = mp_derivatives(p)
    s1 = first_order_closed_form(p).values
    s2 = second_order_closed_form(p).values
    assert np.allclose(s1, g, rtol=1e-10, atol=0)
    for i in range(4):
        for j in range(4):
            assert s2[i, j] == pytest.approx(H[i, j], rel=1e-9, abs=1e-12 * np.max(np.abs(H[i])))


def test_s33_s44_exactly_zero(analyses):
    for a in analyses:
        for m in (a.second_closed, a.second_quadrature):
            assert m.entry(3, 3) == 0.0
            assert m.entry(4, 4) == 0.0


def test_sign_structure(analyses):
    for a in analyses:
        s = a.first_closed
        assert s.s1 < 0 and s.s2 < 0 and s.s3 > 0 and s.s4 > 0
        assert a.second_closed.entry(1, 1) > 0


def test_quadrature_close_to_closed_form(analyses):
    for a in analyses:
        assert np.allclose(a.first_quadrature.values, a.first_closed.values, rtol=1e-4)
        q, c = a.second_quadrature.values, a.second_closed.values
        for i in range(4):
            assert np.allclose(q[i], c[i], rtol=1e-4, atol=1e-6 * np.max(np.abs(c[i])))


def test_quadrature_error_shrinks_fourfold():
    p = nominal_parameters(10.0)
    errs = []
    for n in (2001, 4001):
        a = analyze_detector(p, Grid.for_params(p, n))
        errs.append(abs(a.second_quadrature.entry(1, 1) / a.second_closed.entry(1, 1) - 1))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_symmetry_records(analyses):
    for a in analyses:
        methods = {r.method for r in a.symmetry}
        assert methods == {CLOSED_FORM, QUADRATURE}
        assert len(a.symmetry) == 2 * len(SYMMETRY_PAIRS)
        for r in a.symmetry:
            limit = 1e-10 if r.method == CLOSED_FORM else 1e-2
            assert r.rel_discrepancy <= limit, r


def test_s24_equals_s42_closed_form():
    for b in (10.0, 40.0, 49.5):
        p = nominal_parameters(b)
        routes = closed_form_routes(p)
        assert routes[(2, 4)] == pytest.approx(routes[(4, 2)], rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(b=st.floats(-49.9, 49.9), c=st.floats(0.1, 10.0))
def test_scale_equivariance_in_q(b, c):
    p = nominal_parameters(b)
    q = p.with_alpha([p.sigma_a, p.diff_coeff, c * p.source_q, p.sigma_d])
    s, t = first_order_closed_form(p), first_order_closed_form(q)
    assert t.s1 == pytest.approx(c * s.s1, rel=1e-12)
    assert t.s2 == pytest.approx(c * s.s2, rel=1e-12)
    assert t.s3 == pytest.approx(s.s3, rel=1e-12)
    assert t.s4 == pytest.approx(c * s.s4, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(b=st.floats(-49.9, 49.9))
def test_closed_form_mirror(b):
    p, q = nominal_parameters(b), nominal_parameters(-b)
    assert np.array_equal(first_order_closed_form(p).values, first_order_closed_form(q).values)
    assert np.array_equal(second_order_closed_form(p).values, second_order_closed_form(q).values)


def test_relative_normalization():
    p = nominal_parameters(10.0)
    s2 = second_order_closed_form(p)
    r = 3.7756e9
    rel = to_relative(s2, p, r)
    assert rel.entry(1, 1) == pytest.approx(s2.entry(1, 1) * p.sigma_a ** 2 / r)
    assert rel.entry(2, 4) == pytest.approx(s2.entry(2, 4) * p.diff_coeff * p.sigma_d / r)
    with pytest.raises(ZeroDivisionError):
        to_relative(s2, p, 0.0)
    with pytest.raises(ValueError):
        to_relative(np.zeros(3), p, 1.0)


def test_relative_q_and_sigma_d_unity():
    for b in (10.0, 40.0, 49.5):
        p = nominal_parameters(b)
        rel = to_relative(first_order_closed_form(p), p, analytic_response(p))
        assert rel.s3 == pytest.approx(1.0, rel=1e-14)
        assert rel.s4 == pytest.approx(1.0, rel=1e-14)


def test_matrix_helpers():
    m = SensitivityMatrix.from_entries({(1, 2): 5.0, (2, 2): -1.0}, CLOSED_FORM)
    assert m.entry(2, 1) == 5.0 and m.entry(1, 2) == 5.0
    assert len(m.distinct()) == 10
    assert np.array_equal(m.diagonal, [0.0, -1.0, 0.0, 0.0])
    v = SensitivityVector([1, 2, 3, 4], QUADRATURE)
    assert v.as_dict()["S4(SIGd)"] == 4.0


def test_units():
    assert sensitivity_units(2) == "dimensionless"
    assert sensitivity_units(0) == "n cm^-2 s^-1"
    assert sensitivity_units(2, 2) == "n^-1 cm^3 s"
    assert sensitivity_units(2, 3) == "cm"
