import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slabadjoint.adjoint import (
    closed_form_field,
    closed_form_lambda1,
    closed_form_lambda2,
    closed_form_lambda4,
    closed_form_psi,
    closed_form_theta1,
    closed_form_theta2,
    closed_form_theta3,
    lambda1_parametric,
    solve_first_adjoint,
    solve_second_adjoints,
)
from slabadjoint.bvp import Grid, SolveLedger, solve_flux
from slabadjoint.checks import lambda1_printed_report
from slabadjoint.errors import DomainError
from slabadjoint.model import analytic_flux, nominal_parameters


def textbook_psi(p, x):
    # textbook form in 60-digit arithmetic, which absorbs its cancellation
    with mp.workdps(60):
        sa, d, sd = mp.mpf(p.sigma_a), mp.mpf(p.diff_coeff), mp.mpf(p.sigma_d)
        a, b = mp.mpf(p.half_thickness_a), mp.mpf(p.detector_b)
        k = mp.sqrt(sa / d)
        out = []
        for xi in np.atleast_1d(x):
            xi = mp.mpf(float(xi))
            v = mp.sinh((b - a) * k) / mp.sinh(2 * a * k) * mp.sinh((xi + a) * k)
            if xi >= b:
                v += mp.sinh((xi - b) * k)
            out.append(float(sd / mp.sqrt(sa * d) * v))
    return np.array(out)


def fd_param(fn, p, name, x, rel=1e-6):
    base = getattr(p, name)
    h = rel * base
    alpha = dict(sigma_a=p.sigma_a, diff_coeff=p.diff_coeff, source_q=p.source_q, sigma_d=p.sigma_d)
    up, dn = dict(alpha), dict(alpha)
    up[name] += h
    dn[name] -= h
    return (fn(p.with_alpha(list(up.values())), x) - fn(p.with_alpha(list(dn.values())), x)) / (2 * h)


X = np.linspace(-49.0, 49.0, 99)


@pytest.mark.parametrize("b", [10.0, 40.0, -40.0, 49.5])
def test_psi_matches_textbook(b):
    p = nominal_parameters(b)
    got, ref = closed_form_psi(p, X), textbook_psi(p, X)
    assert np.allclose(got, ref, rtol=1e-12, atol=0.0)


def test_psi_boundary_values_and_kink():
    p = nominal_parameters(10.0)
    assert closed_form_psi(p, 50.0) == pytest.approx(0.0, abs=1e-12)
    assert closed_form_psi(p, -50.0) == pytest.approx(0.0, abs=1e-12)
    h = 1e-6
    right = (closed_form_psi(p, 10.0 + h) - closed_form_psi(p, 10.0)) / h
    left = (closed_form_psi(p, 10.0) - closed_form_psi(p, 10.0 - h)) / h
    assert right - left == pytest.approx(p.sigma_d / p.diff_coeff, rel=1e-4)


def test_psi_is_negative_inside():
    p = nominal_parameters(10.0)
    assert np.all(closed_form_psi(p, X) < 0)


@settings(max_examples=40, deadline=None)
@given(b=st.floats(-49.0, 49.0), x=st.floats(-49.0, 49.0))
def test_green_reciprocity(b, x):
    # the slab Green's function is symmetric in source and field points
    p = nominal_parameters(b)
    q = nominal_parameters(x)
    g1 = closed_form_psi(p, x)
    g2 = closed_form_psi(q, b)
    assert g1 == pytest.approx(g2, rel=1e-9, abs=1e-300)


def test_position_outside_raises():
    with pytest.raises(DomainError):
        closed_form_psi(nominal_parameters(), 51.0)


def test_lambda1_is_psi_derivative_in_sigma_a():
    p = nominal_parameters(40.0)
    fd = fd_param(closed_form_psi, p, "sigma_a", X)
    assert np.allclose(lambda1_parametric(p, X), fd, rtol=1e-6, atol=1e-7 * np.max(np.abs(fd)))


def test_theta1_is_flux_derivative_in_sigma_a():
    p = nominal_parameters()
    fd = fd_param(analytic_flux, p, "sigma_a", X)
    assert np.allclose(closed_form_theta1(p, X), fd, rtol=1e-6, atol=1e-7 * np.max(np.abs(fd)))


def test_theta2_is_flux_derivative_in_d():
    p = nominal_parameters()
    fd = fd_param(analytic_flux, p, "diff_coeff", X)
    assert np.allclose(closed_form_theta2(p, X), fd, rtol=1e-5, atol=1e-7 * np.max(np.abs(fd)))


def test_derived_members():
    p = nominal_parameters(10.0)
    assert np.allclose(closed_form_theta3(p, X), -analytic_flux(p, X) / p.source_q, rtol=1e-13)
    assert np.allclose(closed_form_lambda4(p, X), closed_form_psi(p, X) / p.sigma_d, rtol=1e-15)
    assert np.allclose(closed_form_lambda2(p, X), -p.sigma_a / p.diff_coeff * lambda1_parametric(p, X), rtol=1e-15)


@pytest.fixture(scope="module")
def bundle40():
    p = nominal_parameters(40.0)
    g = Grid.for_params(p, 4001)
    led = SolveLedger()
    phi = solve_flux(p, g, led)
    psi = solve_first_adjoint(p, g, led)
    return p, g, led, phi, solve_second_adjoints(p, g, psi, phi, led)


def test_bundle_solve_count(bundle40):
    _, _, led, _, bnd = bundle40
    assert bnd.solve_count == 4
    assert led.adjoint_solves == 4
    assert led.count("forward") == 1


@pytest.mark.parametrize("member,fn", [
    ("psi", closed_form_psi),
    ("lambda1", lambda1_parametric),
    ("theta1", closed_form_theta1),
    ("theta2", closed_form_theta2),
    ("theta3", closed_form_theta3),
    ("lambda2", closed_form_lambda2),
    ("lambda4", closed_form_lambda4),
])
def test_numeric_members_match_closed_forms(bundle40, member, fn):
    p, g, _, _, bnd = bundle40
    num = getattr(bnd, member).values
    ref = closed_form_field(g, fn, p).values
    assert np.max(np.abs(num - ref)) < 1e-4 * np.max(np.abs(ref))


def test_members_converge_at_second_order():
    p = nominal_parameters(10.0)
    errs = []
    for n in (1001, 2001):
        g = Grid.for_params(p, n)
        phi = solve_flux(p, g)
        bnd = solve_second_adjoints(p, g, solve_first_adjoint(p, g), phi)
        errs.append(np.max(np.abs(bnd.lambda1.values - lambda1_parametric(p, g.nodes))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_printed_lambda1_disagrees(analyses):
    # the printed particular solution does not solve its equation; kept as a report
    rep = lambda1_printed_report(analyses[0])
    assert not rep.passed and not rep.gating
    assert rep.measured > 1.0


def test_printed_lambda1_literal_reading_breaks_boundary():
    p = nominal_parameters(10.0)
    with np.errstate(over="ignore", invalid="ignore"):
        end = closed_form_lambda1(p, 50.0, homogeneous_arg_scaled=False)
    assert not abs(end) < 1e-6
