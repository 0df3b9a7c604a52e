"""First- and second-order adjoint sensitivities for a slab diffusion detector."""
from .adjoint import AdjointBundle, lambda1_parametric, solve_first_adjoint, solve_second_adjoints
from .bvp import Grid, ScalarField, SolveLedger, SourceSpec, integrate, sample_at, solve_bvp, solve_flux
from .errors import (
    ConfigError,
    DomainError,
    GridMismatchError,
    OffGridError,
    ParameterError,
    SingularSystemError,
    SlabError,
)
from .forward import ParameterVariation, solve_forward_sensitivity, total_first_variation
from .model import ModelParameters, analytic_flux, analytic_response, nominal_parameters
from .pipeline import DetectorAnalysis, analyze_detector
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
from .uncertainty import PAPER_CASES, ResponseMoments, UncertaintyCase, response_moments

__version__ = "0.1.0"
