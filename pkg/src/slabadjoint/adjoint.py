"""First and second adjoint functions for the slab detector response.

Every adjoint here solves the same operator L = D d2/dx2 - Sigma_a with zero
boundary values; only the source changes:

    psi      L psi    = Sigma_d delta(x - b)          (first adjoint)
    lambda1  L lam1   = psi                           (solved)
    theta1   L theta1 = phi                           (solved)
    theta2   L theta2 = Q/D - (Sigma_a/D) phi         (solved)
    lambda4  = psi / Sigma_d                          (same system, unit weight)
    theta3   = -phi / Q                               (L theta3 = 1)
    lambda2  = -(Sigma_a/D) lambda1                   (proportional source)

lambda3 and theta4 would solve homogeneous systems and are identically zero,
so they are not represented. One response therefore costs four solves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bvp import (
    FIRST_ADJOINT,
    SECOND_ADJOINT,
    Grid,
    ScalarField,
    SolveLedger,
    SourceSpec,
    solve_bvp,
)
from .errors import DomainError
from .model import (
    ModelParameters,
    _half_cosh_scaled,
    _half_sinh_scaled,
    cosh_ratio,
    flux_shape,
    sinh_cosh_ratio,
)


@dataclass(frozen=True)
class AdjointBundle:
    """All adjoint functions needed for first- and second-order sensitivities.

    ``solve_count`` is the number of large-scale solves spent building it
    (4 when the derived members come from the reuse rules).
    """

    psi: ScalarField
    lambda1: ScalarField
    theta1: ScalarField
    theta2: ScalarField
    lambda4: ScalarField
    theta3: ScalarField
    lambda2: ScalarField
    solve_count: int

    @property
    def grid(self) -> Grid:
        return self.psi.grid


def solve_first_adjoint(p: ModelParameters, grid: Grid, ledger: SolveLedger | None = None) -> ScalarField:
    return solve_bvp(p, grid, SourceSpec(deltas=((p.detector_b, p.sigma_d),)), ledger, FIRST_ADJOINT)


def solve_second_adjoints(
    p: ModelParameters,
    grid: Grid,
    psi: ScalarField,
    phi: ScalarField,
    ledger: SolveLedger | None = None,
) -> AdjointBundle:
    """Three more solves (lambda1, theta1, theta2); the rest by reuse."""
    sa, d, q = p.sigma_a, p.diff_coeff, p.source_q
    lam1 = solve_bvp(p, grid, SourceSpec(smooth=psi), ledger, SECOND_ADJOINT)
    th1 = solve_bvp(p, grid, SourceSpec(smooth=phi), ledger, SECOND_ADJOINT)
    th2_src = ScalarField(grid, q / d - (sa / d) * phi.values)
    th2 = solve_bvp(p, grid, SourceSpec(smooth=th2_src), ledger, SECOND_ADJOINT)
    return AdjointBundle(
        psi=psi,
        lambda1=lam1,
        theta1=th1,
        theta2=th2,
        lambda4=psi.scaled(1.0 / p.sigma_d),
        theta3=phi.scaled(-1.0 / q),
        lambda2=lam1.scaled(-sa / d),
        solve_count=4,
    )


# -- closed forms ---------------------------------------------------------------

def _positions(p: ModelParameters, x):
    a = p.half_thickness_a
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > a * (1.0 + 4.0 * np.finfo(float).eps)):
        raise DomainError(f"position outside [-{a}, {a}]")
    return np.clip(xa, -a, a)


def _green_pieces(p: ModelParameters, x):
    """F = sinh(P k) sinh(Q k) / sinh(2 a k) and dF/dk for the slab Green's function.

    (P, Q) = (a - b, x + a) for x < b and (a + b, a - x) for x >= b, so that
    G(x) = -F / (D k) solves L G = delta(x - b). H(0) = 1 puts x = b on the
    right branch; both branches agree there.
    """
    a, b, k = p.half_thickness_a, p.detector_b, p.k
    x = _positions(p, x)
    right = x >= b
    P = np.where(right, a + b, a - b)
    Qd = np.where(right, a - x, x + a)
    r = 2.0 * a
    scale = np.exp((P + Qd - r) * k) / _half_sinh_scaled(r * k)
    sP, sQ = _half_sinh_scaled(P * k), _half_sinh_scaled(Qd * k)
    cP, cQ = _half_cosh_scaled(P * k), _half_cosh_scaled(Qd * k)
    F = scale * sP * sQ
    coth_r = _half_cosh_scaled(r * k) / _half_sinh_scaled(r * k)
    dF = scale * (P * cP * sQ + Qd * sP * cQ) - r * coth_r * F
    return F, dF


def closed_form_psi(p: ModelParameters, x):
    """First adjoint function.

    Algebraically identical to the textbook form
    Sigma_d/sqrt(Sigma_a D) {sinh((b-a)k)/sinh(2ak) sinh((x+a)k) + H(x-b) sinh((x-b)k)},
    rearranged into a single product per branch so nothing cancels.
    """
    F, _ = _green_pieces(p, x)
    out = -p.sigma_d * F / (p.diff_coeff * p.k)
    return float(out) if np.ndim(out) == 0 else out


def closed_form_lambda4(p: ModelParameters, x):
    return closed_form_psi(p, x) / p.sigma_d


def closed_form_theta1(p: ModelParameters, x):
    """theta1 = d(phi)/d(Sigma_a) at fixed D: solves L theta1 = phi."""
    a, k, q, sa = p.half_thickness_a, p.k, p.source_q, p.sigma_a
    x = _positions(p, x)
    bracket = a * math.tanh(a * k) * cosh_ratio(x, a, k) - x * sinh_cosh_ratio(x, a, k)
    out = q * k / (2.0 * sa * sa) * bracket - q / (sa * sa) * flux_shape(k, a, x)
    return float(out) if np.ndim(out) == 0 else out


def closed_form_theta2(p: ModelParameters, x):
    """theta2 = d(phi)/dD: solves L theta2 = Q/D - (Sigma_a/D) phi."""
    a, k, q, d = p.half_thickness_a, p.k, p.source_q, p.diff_coeff
    x = _positions(p, x)
    bracket = x * sinh_cosh_ratio(x, a, k) - a * math.tanh(a * k) * cosh_ratio(x, a, k)
    out = q / (2.0 * k * d * d) * bracket
    return float(out) if np.ndim(out) == 0 else out


def closed_form_theta3(p: ModelParameters, x):
    """theta3 = [cosh(xk)/cosh(ak) - 1] / Sigma_a = -phi/Q: solves L theta3 = 1."""
    x = _positions(p, x)
    out = -flux_shape(p.k, p.half_thickness_a, x) / p.sigma_a
    return float(out) if np.ndim(out) == 0 else out


def closed_form_lambda1(p: ModelParameters, x, homogeneous_arg_scaled: bool = True):
    """lambda1 from the published particular-plus-homogeneous expression, as printed.

    The homogeneous correction is printed with sinh(x), cosh(x);
    ``homogeneous_arg_scaled=True`` reads them as sinh(x k), cosh(x k), the
    only reading that satisfies the boundary conditions. Even so the printed
    particular solution does not satisfy L lambda1 = psi (see
    ``checks.lambda1_printed_report``); use :func:`lambda1_parametric` as the
    working closed form.
    """
    a, b, k = p.half_thickness_a, p.detector_b, p.k
    sa, d, sd = p.sigma_a, p.diff_coeff, p.sigma_d
    x = _positions(p, x)

    def particular(x):
        x = np.asarray(x, dtype=float)
        # sinh(z) - cosh(z) = -exp(-z)
        left = (
            sd / (d * sa) * np.sinh(b * k - a * k) / np.cosh(a * k)
            * (x / 2.0 * np.cosh(x * k + a * k)
               + np.cosh(2.0 * x * k + a * k) * (-np.exp(-x * k)) / (4.0 * k))
        )
        right = (
            -sd / (d * sa) * (x >= b)
            * (x / 2.0 * np.cosh(x * k - b * k)
               + np.cosh(2.0 * x * k - b * k) * (-np.exp(-x * k)) / (4.0 * k))
        )
        return left + right

    pa, pm = particular(a), particular(-a)
    arg = x * k if homogeneous_arg_scaled else x
    out = (
        particular(x)
        - np.sinh(arg) * (pa - pm) / (2.0 * np.sinh(a * k))
        - np.cosh(arg) * (pa + pm) / (2.0 * np.cosh(a * k))
    )
    return float(out) if np.ndim(out) == 0 else out


def lambda1_parametric(p: ModelParameters, x):
    """lambda1 = d(psi)/d(Sigma_a) at fixed D and Sigma_d.

    Differentiating L(Sigma_a) psi = Sigma_d delta in Sigma_a gives
    L (d psi/d Sigma_a) = psi with zero boundary values, which is exactly the
    lambda1 system. With psi = -Sigma_d F(k)/(D k) and dk/dSigma_a = k/(2 Sigma_a):
    lambda1 = -Sigma_d / (2 Sigma_a D) (F' - F/k).
    """
    F, dF = _green_pieces(p, x)
    out = -p.sigma_d / (2.0 * p.sigma_a * p.diff_coeff) * (dF - F / p.k)
    return float(out) if np.ndim(out) == 0 else out


def closed_form_lambda2(p: ModelParameters, x):
    return -p.sigma_a / p.diff_coeff * lambda1_parametric(p, x)


def closed_form_field(grid: Grid, fn, p: ModelParameters) -> ScalarField:
    """Sample a closed-form adjoint on the grid nodes."""
    return ScalarField(grid, fn(p, grid.nodes))
