import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slabadjoint.bvp import VERIFICATION, Grid, SolveLedger, sample_at, solve_flux
from slabadjoint.forward import (
    ParameterVariation,
    closed_form_h_phi,
    solve_forward_sensitivity,
    total_first_variation,
)
from slabadjoint.model import analytic_flux, analytic_response, nominal_parameters
from slabadjoint.sensitivities import first_order_closed_form

P = nominal_parameters(10.0)
G = Grid.for_params(P, 2001)
PHI = solve_flux(P, G)


def test_variation_validation():
    with pytest.raises(ValueError):
        ParameterVariation(d_q=float("nan"))
    v = ParameterVariation.unit(2)
    assert np.array_equal(v.as_array(), [0, 0, 1, 0])
    assert ParameterVariation.from_array(v.as_array()) == v


def test_zero_variation_zero_field():
    h = solve_forward_sensitivity(P, G, ParameterVariation(), phi=PHI)
    assert not np.any(h.values)


def test_q_variation_scales_flux():
    eps = 1e-3
    h = solve_forward_sensitivity(P, G, ParameterVariation(d_q=eps * P.source_q), phi=PHI)
    assert np.allclose(h.values, eps * PHI.values, rtol=1e-12, atol=1e-12 * np.max(PHI.values))


def test_sigma_a_variation_matches_closed_form():
    var = ParameterVariation(d_sigma_a=1e-4)
    h = solve_forward_sensitivity(P, G, var, phi=PHI)
    ref = closed_form_h_phi(P, var, G.nodes)
    assert np.max(np.abs(h.values - ref)) < 1e-3 * np.max(np.abs(ref))


def test_closed_form_h_phi_is_directional_derivative():
    # h_phi = d/de phi(alpha + e h); checked against central differences
    var = ParameterVariation(d_sigma_a=2e-4, d_diff=-3e-3, d_q=1e4, d_sigma_d=0.1)
    x = np.linspace(-49, 49, 41)
    e = 1e-3
    up = P.with_alpha(P.alpha + e * var.as_array())
    dn = P.with_alpha(P.alpha - e * var.as_array())
    fd = (analytic_flux(up, x) - analytic_flux(dn, x)) / (2 * e)
    ref = closed_form_h_phi(P, var, x)
    assert np.allclose(ref, fd, rtol=1e-5, atol=1e-8 * np.max(np.abs(fd)))


def test_closed_form_h_phi_vanishes_at_edges():
    var = ParameterVariation(d_sigma_a=1e-3, d_diff=1e-2, d_q=1.0)
    scale = np.max(np.abs(closed_form_h_phi(P, var, np.linspace(-50, 50, 11))))
    assert abs(closed_form_h_phi(P, var, 50.0)) <= 1e-12 * scale
    assert abs(closed_form_h_phi(P, var, -50.0)) <= 1e-12 * scale


def test_unit_q_gives_s3():
    h = solve_forward_sensitivity(P, G, ParameterVariation.unit(2), phi=PHI)
    dr = total_first_variation(P, G, ParameterVariation.unit(2), h, phi=PHI)
    assert dr == pytest.approx(3.776e2, rel=5e-4)


def test_unit_sigma_d_is_direct_effect_only():
    h = solve_forward_sensitivity(P, G, ParameterVariation.unit(3), phi=PHI)
    assert not np.any(h.values)
    assert total_first_variation(P, G, ParameterVariation.unit(3), h, phi=PHI) == sample_at(PHI, 10.0)


def test_forward_solves_tagged_verification():
    led = SolveLedger()
    solve_forward_sensitivity(P, G, ParameterVariation.unit(0), led)
    assert led.count(VERIFICATION) == 2
    assert led.adjoint_solves == 0


def test_dr_matches_response_derivative():
    var = ParameterVariation(d_sigma_a=1e-6, d_diff=1e-5, d_q=10.0, d_sigma_d=1e-4)
    h = solve_forward_sensitivity(P, G, var, phi=PHI)
    dr = total_first_variation(P, G, var, h, phi=PHI)
    e = 1e-2
    fd = (analytic_response(P.with_alpha(P.alpha + e * var.as_array()))
          - analytic_response(P.with_alpha(P.alpha - e * var.as_array()))) / (2 * e)
    assert dr == pytest.approx(fd, rel=1e-3)


components = st.floats(-1.0, 1.0)


@settings(max_examples=15, deadline=None)
@given(u=st.tuples(components, components, components, components),
       w=st.tuples(components, components, components, components), c=st.floats(-3, 3))
def test_total_variation_linear(u, w, c):
    scale = P.alpha * 1e-2
    hu, hw = np.array(u) * scale, np.array(w) * scale

    def dr(h):
        var = ParameterVariation.from_array(h)
        return total_first_variation(P, G, var, solve_forward_sensitivity(P, G, var, phi=PHI), phi=PHI)

    lhs = dr(hu + c * hw)
    rhs = dr(hu) + c * dr(hw)
    s = np.abs(first_order_closed_form(P).values)
    ref = s @ np.abs(hu) + abs(c) * (s @ np.abs(hw)) + 1.0
    assert abs(lhs - rhs) <= 1e-9 * ref
