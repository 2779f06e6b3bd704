"""Water-level power allocation.

Three policies share one monotone root finder on the water level ``zeta``:

* obfuscating:  ``N_i = zeta / (2 * (1 + sqrt(1 + zeta / lambda_i)))``
  (noise that minimises leakage; more noise on stronger components)
* water-filling: ``P_i = max(0, zeta - S_i)`` (input power that maximises capacity)
* reverse water-filling: ``D_i = min(zeta, sigma_i^2)`` (rate-distortion)

``mode="sum"`` constrains the total over components (parallel channels,
finite-time blocks); ``mode="mean"`` constrains the average, which is the
grid form of a spectral integral. With ``probs`` the mean is an expectation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    AllWeightsZero,
    BracketFailure,
    BudgetNonpositive,
    ConvergenceFailure,
    DistortionExceedsVariance,
    NotMonotone,
    ValidationError,
)

ZERO_WEIGHT_RTOL = 1e-12
MAX_BISECTIONS = 200


def solve_water_level(constraint_fn: Callable[[float], float], target: float,
                      rtol: float = 1e-10, max_iter: int = MAX_BISECTIONS) -> float:
    """Find ``zeta >= 0`` with ``constraint_fn(zeta) == target``.

    ``constraint_fn`` must be nondecreasing and continuous with
    ``constraint_fn(0) <= target``. The bracket grows by doubling from 1,
    then bisection runs until ``|constraint_fn(zeta) - target| <=
    rtol * max(1, |target|)``.

    Raises
    ------
    BracketFailure
        The target is below ``constraint_fn(0)`` or never reached.
    NotMonotone
        A decrease was observed while probing.
    """
    tol = rtol * max(1.0, abs(target))
    f0 = constraint_fn(0.0)
    if f0 > target + tol:
        raise BracketFailure(f"constraint at zero ({f0:.6g}) already exceeds target {target:.6g}")
    if abs(f0 - target) <= tol:
        return 0.0

    lo, f_lo = 0.0, f0
    hi = 1.0
    f_hi = constraint_fn(hi)
    while f_hi < target:
        if f_hi < f_lo:
            raise NotMonotone(f"constraint decreased from {f_lo:.6g} to {f_hi:.6g} near zeta={hi:g}")
        lo, f_lo = hi, f_hi
        hi *= 2.0
        if hi > 1e300:
            raise BracketFailure(f"target {target:.6g} unreachable (constraint tops out near {f_lo:.6g})")
        f_hi = constraint_fn(hi)
    if abs(f_hi - target) <= tol:
        return hi

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = constraint_fn(mid)
        if abs(f_mid - target) <= tol:
            return mid
        if f_mid < target:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid

    best, f_best = (lo, f_lo) if abs(f_lo - target) <= abs(f_hi - target) else (hi, f_hi)
    if abs(f_best - target) <= tol:
        return best
    raise ConvergenceFailure(
        f"bisection stalled at zeta={best:.17g}: residual {f_best - target:.3g} > {tol:.3g}"
    )


def _aggregate(values: np.ndarray, mode: str, probs: Optional[np.ndarray]) -> float:
    if mode == "sum":
        return float(np.sum(values))
    if probs is None:
        return float(np.mean(values))
    return float(np.sum(probs * values))


def _check_mode(mode: str, probs) -> Optional[np.ndarray]:
    if mode not in ("sum", "mean"):
        raise ValidationError(f"mode must be 'sum' or 'mean', got {mode!r}")
    if probs is None:
        return None
    if mode != "mean":
        raise ValidationError("probabilities only apply to mode='mean'")
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValidationError("probs must be a nonnegative vector summing to 1")
    return p


@dataclass(frozen=True)
class Allocation:
    """Per-component powers at water level ``water_level``.

    ``weights`` are the inputs the policy allocated against (signal
    eigenvalues / spectrum for ``obfuscating``, noise levels for
    ``water_filling``, source variances for ``reverse_water_filling``).
    """

    powers: np.ndarray
    water_level: float
    budget: float
    weights: np.ndarray
    mode: str = "sum"
    policy: str = "obfuscating"
    probs: Optional[np.ndarray] = None

    @property
    def total(self) -> float:
        return _aggregate(self.powers, self.mode, self.probs)

    @property
    def residual(self) -> float:
        return self.total - self.budget

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "mode": self.mode,
            "budget": self.budget,
            "zeta": self.water_level,
            "total": self.total,
            "residual": self.residual,
            "num_components": int(self.powers.size),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "weight", "power"])
        for i, (lam, p) in enumerate(zip(self.weights, self.powers)):
            w.writerow([i, repr(float(lam)), repr(float(p))])
        return buf.getvalue()


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def active_mask(weights: np.ndarray) -> np.ndarray:
    """Components above ``1e-12 * max(weights)``; the rest get zero noise."""
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0:
        return np.zeros(0, dtype=bool)
    return weights >= ZERO_WEIGHT_RTOL * np.max(weights)


def obfuscating_powers(weights: np.ndarray, zeta: float) -> np.ndarray:
    """Noise powers ``zeta / (2 * (1 + sqrt(1 + zeta/lambda)))``, zero on null components."""
    weights = np.asarray(weights, dtype=float)
    out = np.zeros_like(weights)
    act = active_mask(weights)
    if zeta > 0:
        lam = weights[act]
        out[act] = zeta / (2.0 * (1.0 + np.sqrt(1.0 + zeta / lam)))
    return out


def leakage_terms(weights: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """Per-component ``0.5 * log2(1 + lambda/N)``; null components contribute 0."""
    weights = np.asarray(weights, dtype=float)
    powers = np.asarray(powers, dtype=float)
    out = np.zeros_like(weights)
    act = active_mask(weights)
    with np.errstate(divide="ignore"):
        out[act] = 0.5 * np.log2(1.0 + weights[act] / powers[act])
    return out


def _check_weights(weights, name="weights") -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-D sequence")
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise ValidationError(f"{name} must be nonnegative")
    return w


def _check_budget(budget: float) -> float:
    budget = float(budget)
    if not budget > 0 or not math.isfinite(budget):
        raise BudgetNonpositive(f"budget must be positive and finite, got {budget}")
    return budget


def obfuscating_allocation(weights, budget: float, mode: str = "sum", probs=None) -> Allocation:
    """Leakage-minimising noise allocation against signal powers ``weights``."""
    lam = _check_weights(weights)
    if not np.all(np.isfinite(lam)):
        raise ValidationError("weights must be finite")
    budget = _check_budget(budget)
    p = _check_mode(mode, probs)
    if p is not None and p.size != lam.size:
        raise ValidationError("probs and weights differ in length")
    if not np.max(lam) > 0:
        raise AllWeightsZero("every weight is zero; there is nothing to obfuscate")

    # normalised so the stopping rule is relative to the budget
    zeta = solve_water_level(lambda z: _aggregate(obfuscating_powers(lam, z), mode, p) / budget, 1.0)
    powers = obfuscating_powers(lam, zeta)
    # absorb the root-finder residual so the budget is met to rounding
    powers *= budget / _aggregate(powers, mode, p)
    return Allocation(_readonly(powers), zeta, budget, _readonly(lam),
                      mode, "obfuscating", None if p is None else _readonly(p))


def water_filling(noise_spectrum, budget: float, mode: str = "sum", probs=None) -> Allocation:
    """Capacity-achieving input powers ``max(0, zeta - S_z)``.

    Infinite noise levels are allowed and never receive power.
    """
    s = _check_weights(noise_spectrum, "noise_spectrum")
    budget = _check_budget(budget)
    p = _check_mode(mode, probs)
    if p is not None and p.size != s.size:
        raise ValidationError("probs and noise_spectrum differ in length")
    if not np.any(np.isfinite(s) & ((p > 0) if p is not None else True)):
        raise ValidationError("every component has infinite noise")

    # solve for the level above the noise floor so tiny budgets keep full precision
    finite = np.isfinite(s) & ((p > 0) if p is not None else True)
    floor = float(np.min(s[finite]))
    depth = np.where(np.isfinite(s), s - floor, np.inf)

    def powers(u):
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(depth), np.maximum(0.0, u - depth), 0.0)

    u = solve_water_level(lambda u: _aggregate(powers(u), mode, p) / budget, 1.0)
    return Allocation(_readonly(powers(u)), floor + u, budget, _readonly(s),
                      mode, "water_filling", None if p is None else _readonly(p))


def reverse_water_filling(variances, budget: float) -> Allocation:
    """Rate-distortion allocation ``D_i = min(zeta, sigma_i^2)`` with ``sum D_i = budget``."""
    var = _check_weights(variances, "variances")
    if np.any(var <= 0) or not np.all(np.isfinite(var)):
        raise ValidationError("variances must be positive and finite")
    budget = _check_budget(budget)
    total = float(np.sum(var))
    if budget > total * (1 + 1e-12):
        raise DistortionExceedsVariance(
            f"distortion {budget:g} exceeds total variance {total:g}; the rate is zero"
        )
    budget = min(budget, total)
    zeta = solve_water_level(lambda z: float(np.sum(np.minimum(z, var))) / budget, 1.0)
    return Allocation(_readonly(np.minimum(zeta, var)), zeta, budget, _readonly(var),
                      "sum", "reverse_water_filling")


def rate_distortion_bits(alloc: Allocation) -> float:
    """``sum 0.5 * log2(sigma_i^2 / D_i)`` for a reverse water-filling allocation."""
    return float(np.sum(0.5 * np.log2(alloc.weights / alloc.powers)))
