"""Moment propagation for uncorrelated Gaussian parameters.

Only the diagonal second derivatives S_ii enter (the cross terms S_ij,
i != j, are not part of these truncated formulas):

    E[r]        = r0 + 1/2 sum_i S_ii s_i^2
    cov(rk, rl) = sum_i Sk_i Sl_i s_i^2 + 1/2 sum_i Sk_ii Sl_ii s_i^4
    mu3(rk)     = 3 sum_i S_i^2 S_ii s_i^4
    gamma1      = mu3 / var^(3/2)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ModelParameters
from .sensitivities import SensitivityMatrix, SensitivityVector

CORRELATION_SLACK = 1e-12


@dataclass(frozen=True)
class UncertaintyCase:
    """Relative standard deviations for (Sigma_a, D, Q, Sigma_d)."""

    name: str
    rel_sd: tuple

    def __post_init__(self):
        rel = tuple(float(v) for v in self.rel_sd)
        if len(rel) != 4:
            raise ValueError("rel_sd needs four entries (Sigma_a, D, Q, Sigma_d)")
        if any(not np.isfinite(v) or v < 0 for v in rel):
            raise ValueError("relative standard deviations must be finite and >= 0")
        object.__setattr__(self, "rel_sd", rel)

    def sigmas(self, p: ModelParameters) -> np.ndarray:
        """Absolute standard deviations sigma_i = rel_i * alpha_i."""
        return np.asarray(self.rel_sd) * p.alpha


#: Relative standard deviations studied for the water-pool slab.
PAPER_CASES = (
    UncertaintyCase("1", (0.0, 0.0, 0.15, 0.0)),
    UncertaintyCase("2", (0.0, 0.0, 0.0, 0.15)),
    UncertaintyCase("3", (0.15, 0.0, 0.0, 0.0)),
    UncertaintyCase("4", (0.0, 0.15, 0.0, 0.0)),
    UncertaintyCase("5", (0.10, 0.10, 0.10, 0.10)),
)


def _vec(s) -> np.ndarray:
    return np.asarray(s.values if isinstance(s, SensitivityVector) else s, dtype=float).reshape(4)


def _diag(m) -> np.ndarray:
    if isinstance(m, SensitivityMatrix):
        return m.diagonal
    m = np.asarray(m, dtype=float)
    return np.diag(m).copy() if m.ndim == 2 else m.reshape(4)


def expected_value(nominal_response: float, matrix, case: UncertaintyCase, p: ModelParameters) -> float:
    s = case.sigmas(p)
    return float(nominal_response + 0.5 * np.sum(_diag(matrix) * s ** 2))


def covariance(vec_k, mat_k, vec_l, mat_l, case: UncertaintyCase, p: ModelParameters) -> float:
    s2 = case.sigmas(p) ** 2
    first = np.sum(_vec(vec_k) * _vec(vec_l) * s2)
    second = 0.5 * np.sum(_diag(mat_k) * _diag(mat_l) * s2 ** 2)
    return float(first + second)


def variance(vector, matrix, case: UncertaintyCase, p: ModelParameters) -> float:
    return covariance(vector, matrix, vector, matrix, case, p)


def correlation(cov: float, var_k: float, var_l: float) -> float:
    if not (var_k > 0 and var_l > 0):
        raise ZeroDivisionError("correlation undefined for zero variance")
    rho = cov / np.sqrt(var_k * var_l)
    # rounding can push a perfect correlation a hair past 1
    if 1.0 < abs(rho) <= 1.0 + CORRELATION_SLACK:
        rho = float(np.sign(rho))
    return float(rho)


def third_order_correlation(vecs: Sequence, mats: Sequence, case: UncertaintyCase, p: ModelParameters) -> float:
    """mu3(rk, rl, rm) for three responses given as (vec, mat) triples."""
    s4 = case.sigmas(p) ** 4
    (a, b, c), (A, B, C) = [_vec(v) for v in vecs], [_diag(m) for m in mats]
    return float(np.sum((A * b * c + a * B * c + a * b * C) * s4))


def third_moment_and_skewness(vector, matrix, case: UncertaintyCase, p: ModelParameters):
    s = case.sigmas(p)
    v, d = _vec(vector), _diag(matrix)
    mu3 = float(3.0 * np.sum(v ** 2 * d * s ** 4))
    var = variance(vector, matrix, case, p)
    gamma = mu3 / var ** 1.5 if var > 0 else 0.0
    return mu3, float(gamma)


@dataclass(frozen=True)
class ResponseMoments:
    """Moments of one response under one uncertainty case."""

    nominal: float
    expected_value: float
    variance: float
    third_central_moment: float
    skewness: float

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    @property
    def relative_std(self) -> float:
        """Standard deviation relative to the nominal response."""
        return self.std / self.nominal


def response_moments(nominal_response: float, vector, matrix, case: UncertaintyCase,
                     p: ModelParameters) -> ResponseMoments:
    mu3, gamma = third_moment_and_skewness(vector, matrix, case, p)
    return ResponseMoments(
        nominal=float(nominal_response),
        expected_value=expected_value(nominal_response, matrix, case, p),
        variance=variance(vector, matrix, case, p),
        third_central_moment=mu3,
        skewness=gamma,
    )


def covariance_matrix(responses: Sequence, case: UncertaintyCase, p: ModelParameters):
    """Covariance and correlation matrices across responses.

    ``responses`` is a sequence of (vector, matrix) pairs. All responses
    must share the parameter values in ``p`` (only detector position varies).
    """
    n = len(responses)
    cov = np.empty((n, n))
    for i, (vk, mk) in enumerate(responses):
        for j in range(i, n):
            vl, ml = responses[j]
            cov[i, j] = cov[j, i] = covariance(vk, mk, vl, ml, case, p)
    corr = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if cov[i, i] > 0 and cov[j, j] > 0:
                corr[i, j] = 1.0 if i == j else correlation(cov[i, j], cov[i, i], cov[j, j])
    return cov, corr


# -- Monte Carlo oracle on the quadratic surrogate ------------------------------

@dataclass(frozen=True)
class MonteCarloMoments:
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    skewness: float
    skewness_se: float
    n_samples: int


def monte_carlo_moments(nominal_response: float, vector, matrix, case: UncertaintyCase,
                        p: ModelParameters, n_samples: int = 1_000_000, seed: int = 0,
                        diagonal_only: bool = True, n_batches: int = 100) -> MonteCarloMoments:
    """Sample r0 + S.d + 1/2 d'Hd with d ~ N(0, diag(sigma^2)).

    With ``diagonal_only`` the Hessian is reduced to its diagonal, which is the
    surrogate the closed-form moments describe exactly. Standard errors come
    from batch means, which stays honest for skewed outputs.
    """
    rng = np.random.default_rng(seed)
    s = case.sigmas(p)
    delta = rng.standard_normal((n_samples, 4)) * s
    hess = np.asarray(matrix.values if isinstance(matrix, SensitivityMatrix) else matrix, dtype=float)
    if diagonal_only:
        hess = np.diag(np.diag(hess))
    r = nominal_response + delta @ _vec(vector) + 0.5 * np.einsum("ni,ij,nj->n", delta, hess, delta)

    def stats(x):
        m = x.mean()
        c = x - m
        v = np.mean(c ** 2)
        g = np.mean(c ** 3) / v ** 1.5 if v > 0 else 0.0
        return m, v, g

    m, v, g = stats(r)
    batches = np.array([stats(chunk) for chunk in np.array_split(r, n_batches)])
    se = batches.std(axis=0, ddof=1) / np.sqrt(n_batches)
    return MonteCarloMoments(float(m), float(se[0]), float(v), float(se[1]), float(g), float(se[2]), n_samples)
