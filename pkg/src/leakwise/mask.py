"""Optimal additive privacy masks ``x_bar = x + n`` with ``n`` independent of ``x``.

Primal designs take a distortion (or output power) budget and return the
mask minimising the leakage rate ``I(x; x_bar)``. Dual designs take a
leakage cap ``R`` and return the cheapest mask meeting it. Since
``x - x_bar = -n``, a distortion budget is a noise power budget, so every
design reduces to an obfuscating allocation over the signal's spectrum,
fading states or covariance eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .allocation import leakage_terms, obfuscating_allocation, obfuscating_powers, solve_water_level
from .errors import (
    BudgetNonpositive,
    CapUnreachable,
    InconsistentResult,
    OutputBudgetTooSmall,
    ValidationError,
)
from .leakage import FadingModel, leakage_colored, leakage_fading
from .spectral import CovarianceMatrix, SpectralDensity, eig_sym

NoiseSpec = Union[SpectralDensity, np.ndarray, CovarianceMatrix]


@dataclass(frozen=True)
class MaskDesign:
    """A designed mask.

    ``noise_spec`` is a spectrum (stationary), a vector of per-fading-state
    variances (fading) or a full covariance (finite time). ``budget`` is the
    declared constraint: a distortion, an output power or a leakage cap,
    per ``constraint_kind``. ``budget_used`` is the distortion (or output
    power, for output-power designs) actually spent.
    """

    regime: str
    noise_spec: NoiseSpec
    achieved_leakage_bits: float
    budget_used: float
    budget: float
    constraint_kind: str
    water_level: Optional[float]
    details: dict = field(default_factory=dict, compare=False)

    def noise_spec_dict(self) -> dict:
        ns = self.noise_spec
        if isinstance(ns, SpectralDensity):
            return {"kind": "spectrum", **ns.to_dict()}
        if isinstance(ns, CovarianceMatrix):
            return {"kind": "covariance", **ns.to_dict()}
        return {"kind": "state_variances", "variances": np.asarray(ns).tolist()}

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "constraint_kind": self.constraint_kind,
            "budget": self.budget,
            "budget_used": self.budget_used,
            "achieved_leakage_bits": self.achieved_leakage_bits,
            "zeta": self.water_level,
            "noise_spec": self.noise_spec_dict(),
            "details": self.details,
        }


def _check_cap(R: float) -> float:
    R = float(R)
    if not R > 0 or not math.isfinite(R):
        raise CapUnreachable(f"leakage cap must be positive and finite, got {R}")
    return R


def _check_distortion(D: float) -> float:
    D = float(D)
    if not D > 0 or not math.isfinite(D):
        raise BudgetNonpositive(f"distortion budget must be positive and finite, got {D}")
    return D


def _zeta_for_cap(weights: np.ndarray, R: float, aggregate) -> float:
    # leakage falls monotonically in zeta; its negation is a valid constraint map
    def neg_leak(z):
        with np.errstate(divide="ignore"):
            return -aggregate(leakage_terms(weights, obfuscating_powers(weights, z)))
    return solve_water_level(neg_leak, -R)


# -- stationary ---------------------------------------------------------------

def design_stationary(s_x: SpectralDensity, distortion_budget: float) -> MaskDesign:
    D = _check_distortion(distortion_budget)
    rep = leakage_colored(s_x, D)
    noise = SpectralDensity(s_x.grid, rep.allocation.powers)
    return MaskDesign("stationary", noise, rep.value_bits, noise.variance(), D,
                      "distortion", rep.allocation.water_level)


def dual_stationary_distortion(s_x: SpectralDensity, leakage_cap: float) -> MaskDesign:
    """Least mean distortion keeping the leakage rate at ``leakage_cap``."""
    R = _check_cap(leakage_cap)
    lam = s_x.values
    if not np.max(lam) > 0:
        raise ValidationError("input spectrum is identically zero")
    zeta = _zeta_for_cap(lam, R, np.mean)
    noise = SpectralDensity(s_x.grid, obfuscating_powers(lam, zeta))
    achieved = float(np.mean(leakage_terms(lam, noise.values)))
    return MaskDesign("stationary", noise, achieved, noise.variance(), R, "leakage_cap", zeta)


def design_stationary_output_power(s_x: SpectralDensity, output_budget: float) -> MaskDesign:
    X = float(output_budget)
    var = s_x.variance()
    if not X > var:
        raise OutputBudgetTooSmall(f"output budget {X:g} must exceed the data variance {var:g}")
    inner = design_stationary(s_x, X - var)
    return MaskDesign("stationary", inner.noise_spec, inner.achieved_leakage_bits,
                      inner.budget_used + var, X, "output_power", inner.water_level)


def dual_stationary_power(s_x: SpectralDensity, leakage_cap: float) -> MaskDesign:
    """Least output power ``E[x_bar^2]`` keeping the leakage rate at ``leakage_cap``."""
    inner = dual_stationary_distortion(s_x, leakage_cap)
    return MaskDesign("stationary", inner.noise_spec, inner.achieved_leakage_bits,
                      inner.budget_used + s_x.variance(), inner.budget, "leakage_cap",
                      inner.water_level, {"objective": "output_power",
                                          "min_distortion": inner.budget_used})


def conditional_entropy_rate_gain(s_x: SpectralDensity, distortion_budget: float) -> float:
    """Largest achievable conditional entropy rate ``h(x | x_bar)`` in bits.

    Uses the optimal mask, so this equals the data's entropy rate minus the
    minimum leakage rate. Returns ``-inf`` if the spectrum has nulls.
    """
    design = design_stationary(s_x, distortion_budget)
    S = s_x.values
    N = design.noise_spec.values
    two_pi_e = 2.0 * math.pi * math.e
    with np.errstate(divide="ignore", invalid="ignore"):
        h_cond = float(np.mean(0.5 * np.log2(two_pi_e * S * N / (S + N))))
        h_x = float(np.mean(0.5 * np.log2(two_pi_e * S)))
    if math.isfinite(h_cond):
        resid = h_cond - (h_x - design.achieved_leakage_bits)
        if abs(resid) > 1e-9:
            raise InconsistentResult(f"entropy identity residual {resid:.3g} bits")
    return h_cond


# -- fading --------------------------------------------------------------------

def design_fading(fading: FadingModel, sigma_sq: float, distortion_budget: float,
                  side_info: bool) -> MaskDesign:
    """Mask for ``x_k = h_k * x_hat_k``; with side information the variance tracks ``h_k``."""
    D = _check_distortion(distortion_budget)
    rep = leakage_fading(fading, sigma_sq, D, side_info)
    if side_info:
        variances = rep.allocation.powers
        zeta = rep.allocation.water_level
    else:
        variances = np.full(fading.gains_sq.size, D)
        zeta = None
    return MaskDesign(rep.regime, variances, rep.value_bits, fading.expect(variances), D,
                      "distortion", zeta)


def dual_fading(fading: FadingModel, sigma_sq: float, leakage_cap: float,
                side_info: bool) -> MaskDesign:
    R = _check_cap(leakage_cap)
    s = float(sigma_sq)
    if not s > 0:
        raise ValidationError(f"sigma_sq must be positive, got {sigma_sq}")
    weights = fading.gains_sq * s
    if side_info:
        zeta = _zeta_for_cap(weights, R, fading.expect)
        variances = obfuscating_powers(weights, zeta)
        regime = "fading_si"
    else:
        def neg_leak(D):
            with np.errstate(divide="ignore"):
                return -fading.expect(leakage_terms(weights, np.full(weights.size, D)))
        D = solve_water_level(neg_leak, -R)
        variances = np.full(weights.size, D)
        zeta = None
        regime = "fading_no_si"
    achieved = fading.expect(leakage_terms(weights, variances))
    return MaskDesign(regime, variances, achieved, fading.expect(variances), R, "leakage_cap", zeta)


# -- finite time -----------------------------------------------------------------

def _finite_design(cov_x: CovarianceMatrix, powers: np.ndarray, eig, zeta: float,
                   budget: float, kind: str, diagonal_only: bool) -> MaskDesign:
    U = eig.basis
    noise = (U * powers) @ U.T
    achieved = float(np.sum(leakage_terms(eig.eigenvalues, powers)))
    details = {"eigenvalues": eig.eigenvalues.tolist(), "eigen_powers": powers.tolist()}
    if diagonal_only:
        from .sim import exact_mi_gaussian

        noise = np.diag(np.diag(noise))
        projected = exact_mi_gaussian(cov_x, CovarianceMatrix(noise))
        details["diagonal_only"] = True
        details["leakage_penalty_bits"] = projected - achieved
        achieved = projected
    cov_n = CovarianceMatrix(noise)
    return MaskDesign("finite_time", cov_n, achieved, float(np.trace(cov_n.entries)),
                      budget, kind, zeta, details)


def design_finite(cov_x: CovarianceMatrix, total_distortion: float,
                  diagonal_only: bool = False) -> MaskDesign:
    """Mask for a length ``K+1`` Gaussian block under a total distortion budget.

    The noise covariance shares the data's eigenbasis, ``U diag(N_k) U^T``,
    with ``N_k`` obfuscating-allocated over the eigenvalues. With
    ``diagonal_only`` the noise is projected onto its diagonal (independent
    per-sample noise of the same total power) and the leakage is re-evaluated
    exactly; ``details['leakage_penalty_bits']`` records the loss.
    """
    D = _check_distortion(total_distortion)
    eig = eig_sym(cov_x)
    alloc = obfuscating_allocation(eig.eigenvalues, D, mode="sum")
    return _finite_design(cov_x, alloc.powers, eig, alloc.water_level, D, "distortion",
                          diagonal_only)


def dual_finite(cov_x: CovarianceMatrix, leakage_cap: float) -> MaskDesign:
    R = _check_cap(leakage_cap)
    eig = eig_sym(cov_x)
    lam = eig.eigenvalues
    if lam.size == 0 or not np.max(lam) > 0:
        raise ValidationError("data covariance is zero")
    zeta = _zeta_for_cap(lam, R, np.sum)
    return _finite_design(cov_x, obfuscating_powers(lam, zeta), eig, zeta, R, "leakage_cap", False)
