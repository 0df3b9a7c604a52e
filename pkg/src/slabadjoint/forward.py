"""Forward sensitivity path, kept only as an independent check of the adjoint route.

    L h_phi = -[dD phi'' - dSigma_a phi + dQ],   h_phi(+-a) = 0
    DR = dSigma_d phi(b) + Sigma_d h_phi(b)

Forward solves are charged to the ledger as ``verification``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adjoint import _positions
from .bvp import VERIFICATION, Grid, ScalarField, SolveLedger, SourceSpec, sample_at, solve_bvp, solve_flux
from .model import ModelParameters, cosh_ratio, sinh_cosh_ratio


@dataclass(frozen=True)
class ParameterVariation:
    """Perturbation (dSigma_a, dD, dQ, dSigma_d) in the parameters' own units."""

    d_sigma_a: float = 0.0
    d_diff: float = 0.0
    d_q: float = 0.0
    d_sigma_d: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise ValueError("variation components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.d_sigma_a, self.d_diff, self.d_q, self.d_sigma_d], dtype=float)

    @classmethod
    def from_array(cls, h) -> "ParameterVariation":
        return cls(*(float(v) for v in h))

    @classmethod
    def unit(cls, i: int) -> "ParameterVariation":
        h = np.zeros(4)
        h[i] = 1.0
        return cls.from_array(h)


def solve_forward_sensitivity(
    p: ModelParameters,
    grid: Grid,
    variation: ParameterVariation,
    ledger: SolveLedger | None = None,
    phi: ScalarField | None = None,
) -> ScalarField:
    """Solve for h_phi, eliminating phi'' through the flux equation."""
    if phi is None:
        phi = solve_flux(p, grid, ledger, VERIFICATION)
    sa, d, q = p.sigma_a, p.diff_coeff, p.source_q
    phi_dd = (sa * phi.values - q) / d
    src = -(variation.d_diff * phi_dd - variation.d_sigma_a * phi.values + variation.d_q)
    return solve_bvp(p, grid, SourceSpec(smooth=ScalarField(grid, src)), ledger, VERIFICATION)


def closed_form_h_phi(p: ModelParameters, variation: ParameterVariation, x):
    """h_phi = C1 [cosh(xk) - cosh(ak)] + C2 [x sinh(xk) cosh(ak) - a sinh(ak) cosh(xk)].

    C1 carries 1/cosh(ak) and C2 carries 1/cosh(ak)^2; they are folded into
    the brackets here.
    """
    a, k = p.half_thickness_a, p.k
    sa, d, q = p.sigma_a, p.diff_coeff, p.source_q
    x = _positions(p, x)
    c1 = (variation.d_sigma_a * q / sa - variation.d_q) / sa
    c2 = (variation.d_diff / d - variation.d_sigma_a / sa) * q / (2.0 * math.sqrt(d * sa))
    out = (
        c1 * (cosh_ratio(x, a, k) - 1.0)
        + c2 * (x * sinh_cosh_ratio(x, a, k) - a * math.tanh(a * k) * cosh_ratio(x, a, k))
    )
    return float(out) if np.ndim(out) == 0 else out


def total_first_variation(
    p: ModelParameters,
    grid: Grid,
    variation: ParameterVariation,
    h_phi: ScalarField,
    phi: ScalarField | None = None,
) -> float:
    """Direct effect dSigma_d phi(b) plus indirect effect Sigma_d h_phi(b).

    ``phi`` defaults to a fresh numerical flux so that both terms come from
    the same discretization.
    """
    if phi is None:
        phi = solve_flux(p, grid)
    b = p.detector_b
    return variation.d_sigma_d * sample_at(phi, b) + p.sigma_d * sample_at(h_phi, b)
