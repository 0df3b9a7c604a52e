"""End-to-end sensitivity computation for one detector position."""
from __future__ import annotations

from dataclasses import dataclass, field

from .adjoint import AdjointBundle, solve_first_adjoint, solve_second_adjoints
from .bvp import Grid, ScalarField, SolveLedger, sample_at, solve_flux
from .model import ModelParameters, analytic_response
from .sensitivities import (
    SensitivityMatrix,
    SensitivityVector,
    first_order_closed_form,
    first_order_quadrature,
    second_order_closed_form,
    second_order_quadrature,
    symmetry_report,
    to_relative,
)


@dataclass
class DetectorAnalysis:
    params: ModelParameters
    grid: Grid
    phi: ScalarField
    bundle: AdjointBundle
    ledger: SolveLedger
    response_closed: float
    response_numeric: float
    first_quadrature: SensitivityVector
    first_closed: SensitivityVector
    second_quadrature: SensitivityMatrix
    second_closed: SensitivityMatrix
    symmetry: list = field(default_factory=list)

    @property
    def detector_b(self) -> float:
        return self.params.detector_b

    def relative(self, which: str = "closed"):
        """(first, second) relative sensitivities for one path."""
        if which == "closed":
            r, s1, s2 = self.response_closed, self.first_closed, self.second_closed
        else:
            r, s1, s2 = self.response_numeric, self.first_quadrature, self.second_quadrature
        return to_relative(s1, self.params, r), to_relative(s2, self.params, r)


def analyze_detector(p: ModelParameters, grid: Grid, ledger: SolveLedger | None = None) -> DetectorAnalysis:
    """Flux, the four adjoint solves, and both sensitivity paths."""
    ledger = ledger if ledger is not None else SolveLedger()
    phi = solve_flux(p, grid, ledger)
    psi = solve_first_adjoint(p, grid, ledger)
    bundle = solve_second_adjoints(p, grid, psi, phi, ledger)
    return DetectorAnalysis(
        params=p,
        grid=grid,
        phi=phi,
        bundle=bundle,
        ledger=ledger,
        response_closed=analytic_response(p),
        response_numeric=p.sigma_d * sample_at(phi, p.detector_b),
        first_quadrature=first_order_quadrature(bundle, phi, p),
        first_closed=first_order_closed_form(p),
        second_quadrature=second_order_quadrature(bundle, phi, p),
        second_closed=second_order_closed_form(p),
        symmetry=symmetry_report(bundle, phi, p),
    )
