"""First- and second-order response sensitivities, by quadrature and in closed form.

Parameter order is (Sigma_a, D, Q, Sigma_d), indices 1..4 in names below,
0..3 in arrays. The two computation paths never share intermediate values:
quadrature works only on numerically solved fields, closed form only on the
A, B, C shape functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adjoint import AdjointBundle, closed_form_theta1, closed_form_theta2
from .bvp import ScalarField, integrate, sample_at
from .model import PARAM_LABELS, ModelParameters, helper_A, helper_B, helper_C

QUADRATURE = "quadrature"
CLOSED_FORM = "closed-form"

# Base units as exponent maps: neutrons, cm, s.
_PARAM_UNITS = (
    {"cm": -1},                      # Sigma_a
    {"cm": 1},                       # D
    {"n": 1, "cm": -3, "s": -1},     # Q
    {"cm": -1},                      # Sigma_d
)
RESPONSE_UNITS = {"n": 1, "cm": -3, "s": -1}


def _format_units(exps: dict) -> str:
    parts = []
    for sym in ("n", "cm", "s"):
        e = exps.get(sym, 0)
        if e == 1:
            parts.append(sym)
        elif e:
            parts.append(f"{sym}^{e}")
    return " ".join(parts) if parts else "dimensionless"


def sensitivity_units(*indices: int) -> str:
    """Units of dR / d(alpha_i) [d(alpha_j)...] for 0-based parameter indices."""
    exps = dict(RESPONSE_UNITS)
    for i in indices:
        for sym, e in _PARAM_UNITS[i].items():
            exps[sym] = exps.get(sym, 0) - e
    return _format_units(exps)


@dataclass(frozen=True)
class SensitivityVector:
    """dR/d alpha_i for i = Sigma_a, D, Q, Sigma_d."""

    values: np.ndarray
    method: str

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(4)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    s1 = property(lambda self: float(self.values[0]))
    s2 = property(lambda self: float(self.values[1]))
    s3 = property(lambda self: float(self.values[2]))
    s4 = property(lambda self: float(self.values[3]))

    def __getitem__(self, i):
        return float(self.values[i])

    def as_dict(self) -> dict:
        return {f"S{i + 1}({PARAM_LABELS[i]})": float(v) for i, v in enumerate(self.values)}


@dataclass(frozen=True)
class SensitivityMatrix:
    """Symmetric 4x4 Hessian d2R / d alpha_i d alpha_j.

    Built from the ten upper-triangle entries only, so symmetry is exact.
    """

    values: np.ndarray
    method: str

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(4, 4)
        upper = np.triu(v)
        v = upper + np.triu(v, 1).T
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_entries(cls, entries: dict, method: str) -> "SensitivityMatrix":
        """``entries`` maps 1-based (i, j) with i <= j to values; missing entries are 0."""
        m = np.zeros((4, 4))
        for (i, j), v in entries.items():
            i, j = min(i, j), max(i, j)
            m[i - 1, j - 1] = v
        return cls(m, method)

    def __getitem__(self, ij):
        i, j = ij
        return float(self.values[i, j])

    def entry(self, i: int, j: int) -> float:
        """1-based access, S_ij."""
        return float(self.values[i - 1, j - 1])

    def distinct(self) -> dict:
        return {(i + 1, j + 1): float(self.values[i, j]) for i in range(4) for j in range(i, 4)}

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values).copy()


# -- first order -------------------------------------------------------------

def first_order_quadrature(bundle: AdjointBundle, phi: ScalarField, p: ModelParameters) -> SensitivityVector:
    psi = bundle.psi
    sa, d, q = p.sigma_a, p.diff_coeff, p.source_q
    psi_phi = integrate(psi, phi)
    psi_int = integrate(psi)
    s1 = psi_phi
    # -int psi phi'' with phi'' = (Sigma_a phi - Q)/D
    s2 = -(sa / d) * psi_phi + (q / d) * psi_int
    s3 = -psi_int
    s4 = sample_at(phi, p.detector_b)
    return SensitivityVector([s1, s2, s3, s4], QUADRATURE)


def first_order_closed_form(p: ModelParameters) -> SensitivityVector:
    sa, d, q, sd, k = p.sigma_a, p.diff_coeff, p.source_q, p.sigma_d, p.k
    A, B = helper_A(p), helper_B(p)
    s1 = q * sd * (-A / sa ** 2 + B / (2.0 * sa * math.sqrt(d * sa)))
    s2 = -q * sd / (2.0 * d * sa) * k * B
    s3 = sd / sa * A
    s4 = q / sa * A
    return SensitivityVector([s1, s2, s3, s4], CLOSED_FORM)


# -- second order ------------------------------------------------------------

@dataclass(frozen=True)
class _Integrals:
    """Every inner product the second-order formulas need, computed once."""

    psi_phi: float
    psi: float
    lam1_phi: float
    th1_psi: float
    lam1: float
    lam2_phi: float
    th2_psi: float
    lam2: float
    lam4_phi: float
    lam4: float
    th3_psi: float
    th1_b: float
    th2_b: float
    th3_b: float


def _integrals(bundle: AdjointBundle, phi: ScalarField, p: ModelParameters) -> _Integrals:
    b = p.detector_b
    return _Integrals(
        psi_phi=integrate(bundle.psi, phi),
        psi=integrate(bundle.psi),
        lam1_phi=integrate(bundle.lambda1, phi),
        th1_psi=integrate(bundle.theta1, bundle.psi),
        lam1=integrate(bundle.lambda1),
        lam2_phi=integrate(bundle.lambda2, phi),
        th2_psi=integrate(bundle.theta2, bundle.psi),
        lam2=integrate(bundle.lambda2),
        lam4_phi=integrate(bundle.lambda4, phi),
        lam4=integrate(bundle.lambda4),
        th3_psi=integrate(bundle.theta3, bundle.psi),
        th1_b=sample_at(bundle.theta1, b),
        th2_b=sample_at(bundle.theta2, b),
        th3_b=sample_at(bundle.theta3, b),
    )


def _routes(I: _Integrals, p: ModelParameters) -> dict:
    """Every adjoint-route formula, keyed by the ordered pair it computes.

    Second derivatives of phi and psi are replaced through their equations:
    phi'' = (Sigma_a phi - Q)/D, psi'' = (Sigma_a psi + Sigma_d delta_b)/D.
    """
    sa, d, q, sd = p.sigma_a, p.diff_coeff, p.source_q, p.sigma_d
    # int lam phi'' and int theta psi''
    lam1_phidd = (sa / d) * I.lam1_phi - (q / d) * I.lam1
    th1_psidd = (sa / d) * I.th1_psi + (sd / d) * I.th1_b
    lam2_phidd = (sa / d) * I.lam2_phi - (q / d) * I.lam2
    th2_psidd = (sa / d) * I.th2_psi + (sd / d) * I.th2_b
    lam4_phidd = (sa / d) * I.lam4_phi - (q / d) * I.lam4
    th3_psidd = (sa / d) * I.th3_psi + (sd / d) * I.th3_b
    return {
        # lambda1 / theta1 (derivatives of S1)
        (1, 1): I.lam1_phi + I.th1_psi,
        (1, 2): -(lam1_phidd + th1_psidd),
        (1, 3): -I.lam1,
        (1, 4): I.th1_b,
        # lambda2 / theta2 plus the direct-effect part (derivatives of S2)
        (2, 1): -I.psi_phi / d + I.lam2_phi + I.th2_psi,
        (2, 2): (sa / d ** 2) * I.psi_phi - (q / d ** 2) * I.psi - (lam2_phidd + th2_psidd),
        (2, 3): I.psi / d - I.lam2,
        (2, 4): I.th2_b,
        # theta3 (derivatives of S3)
        (3, 1): -I.th3_psi,
        (3, 2): th3_psidd,
        (3, 3): 0.0,
        (3, 4): -I.th3_b,
        # lambda4 (derivatives of S4)
        (4, 1): I.lam4_phi,
        (4, 2): -lam4_phidd,
        (4, 3): -I.lam4,
        (4, 4): 0.0,
    }


#: Which ordered route fills each distinct matrix entry.
CANONICAL_ROUTES = ((1, 1), (1, 2), (1, 3), (1, 4), (2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (4, 4))


def second_order_routes(bundle: AdjointBundle, phi: ScalarField, p: ModelParameters) -> dict:
    """All 16 ordered-pair values from the adjoint functions (quadrature path)."""
    return _routes(_integrals(bundle, phi, p), p)


def second_order_quadrature(bundle: AdjointBundle, phi: ScalarField, p: ModelParameters) -> SensitivityMatrix:
    routes = second_order_routes(bundle, phi, p)
    return SensitivityMatrix.from_entries({ij: routes[ij] for ij in CANONICAL_ROUTES}, QUADRATURE)


def _closed_entries(p: ModelParameters) -> dict:
    sa, d, q, sd, k = p.sigma_a, p.diff_coeff, p.source_q, p.sigma_d, p.k
    A, B, C = helper_A(p), helper_B(p), helper_C(p)
    return {
        (1, 1): q * sd / sa ** 3 * (2.0 * A - 1.25 * k * B + 0.25 * k * k * C),
        (1, 2): q * sd / (4.0 * d * sa ** 2) * k * (B - k * C),
        (1, 3): sd / sa * (-A / sa + B / (2.0 * math.sqrt(d * sa))),
        (1, 4): q * (-A / sa ** 2 + B / (2.0 * sa * math.sqrt(d * sa))),
        # the published D-D expression drops Sigma_d and misplaces Sigma_a;
        # this is the second D-derivative of -Q Sigma_d k B / (2 D Sigma_a)
        (2, 2): q * sd / (4.0 * sa * d ** 2) * (3.0 * k * B + k * k * C),
        (2, 3): -sd * k / (2.0 * d * sa) * B,
        (2, 4): -q / (2.0 * d * sa) * k * B,
        (3, 3): 0.0,
        (3, 4): A / sa,
        (4, 4): 0.0,
    }


def second_order_closed_form(p: ModelParameters) -> SensitivityMatrix:
    return SensitivityMatrix.from_entries(_closed_entries(p), CLOSED_FORM)


def closed_form_routes(p: ModelParameters) -> dict:
    """Alternative closed-form evaluations of the mixed partials.

    Each pair (i, j) / (j, i) uses a genuinely different expression:
    adjoint-function values at the detector, the S_4i = S_i / Sigma_d and
    S_3i = S_i / Q identities, and the S12 identity that follows from
    eliminating phi'' and psi'' (S12 = -(Sa/D) S11 - (Q/D) S13 - (Sd/D) S14).
    """
    sa, d, q, sd = p.sigma_a, p.diff_coeff, p.source_q, p.sigma_d
    e = _closed_entries(p)
    first = first_order_closed_form(p)
    return {
        (1, 4): closed_form_theta1(p, p.detector_b),
        (4, 1): first.s1 / sd,
        (2, 4): closed_form_theta2(p, p.detector_b),
        (4, 2): first.s2 / sd,
        (1, 3): e[(1, 3)],
        (3, 1): first.s1 / q,
        (2, 3): e[(2, 3)],
        (3, 2): first.s2 / q,
        (1, 2): e[(1, 2)],
        (2, 1): -(sa / d) * e[(1, 1)] - (q / d) * e[(1, 3)] - (sd / d) * e[(1, 4)],
        (3, 4): e[(3, 4)],
        (4, 3): first.s3 / sd,
    }


# -- relative sensitivities --------------------------------------------------

def to_relative(sens, p: ModelParameters, response_value: float):
    """Scale to dimensionless form: S_i a_i / R and S_ij a_i a_j / R."""
    if not response_value > 0:
        raise ZeroDivisionError("relative sensitivities need a positive response value")
    alpha = p.alpha
    if isinstance(sens, SensitivityMatrix):
        return SensitivityMatrix(sens.values * np.outer(alpha, alpha) / response_value, sens.method)
    if isinstance(sens, SensitivityVector):
        return SensitivityVector(sens.values * alpha / response_value, sens.method)
    arr = np.asarray(sens, dtype=float)
    if arr.shape == (4,):
        return arr * alpha / response_value
    if arr.shape == (4, 4):
        return arr * np.outer(alpha, alpha) / response_value
    raise ValueError(f"cannot relativize an array of shape {arr.shape}")


# -- symmetry ----------------------------------------------------------------

SYMMETRY_PAIRS = ((1, 4), (2, 4), (1, 3), (2, 3), (1, 2), (3, 4))


@dataclass(frozen=True)
class SymmetryRecord:
    pair: tuple
    method: str
    forward: float    # S_ij
    reverse: float    # S_ji
    rel_discrepancy: float


def _rel(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0.0 else abs(x - y) / scale


def symmetry_report(bundle: AdjointBundle | None, phi: ScalarField | None, p: ModelParameters) -> list:
    """Compare S_ij with S_ji computed along different adjoint routes.

    Returns closed-form records always and quadrature records when a bundle
    and flux are supplied. Discrepancies are returned, never raised.
    """
    records = []
    closed = closed_form_routes(p)
    for i, j in SYMMETRY_PAIRS:
        x, y = closed[(i, j)], closed[(j, i)]
        records.append(SymmetryRecord((i, j), CLOSED_FORM, x, y, _rel(x, y)))
    if bundle is not None and phi is not None:
        quad = second_order_routes(bundle, phi, p)
        for i, j in SYMMETRY_PAIRS:
            x, y = quad[(i, j)], quad[(j, i)]
            records.append(SymmetryRecord((i, j), QUADRATURE, x, y, _rel(x, y)))
    return records
