"""Channel leakage and channel capacity of additive Gaussian channels.

Leakage is the smallest mutual information rate between input and output
that any admissible noise can achieve; capacity is the largest rate any
admissible input can achieve. All values are in bits per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .allocation import (
    Allocation,
    leakage_terms,
    obfuscating_allocation,
    water_filling,
)
from .errors import (
    AllWeightsZero,
    DegenerateFading,
    InconsistentResult,
    MomentMismatch,
    NonpositiveInput,
    OutputBudgetTooSmall,
    ValidationError,
    ZeroNoiseFrequency,
)
from .spectral import SpectralDensity

REGIMES = ("white", "colored", "parallel", "fading_no_si", "fading_si")


@dataclass(frozen=True)
class LeakageReport:
    """Result of a leakage or capacity computation.

    ``constraint`` is one of ``noise_power``, ``output_power`` or
    ``input_power`` (capacity); ``budget`` is the value of that constraint.
    """

    value_bits: float
    regime: str
    constraint: str
    budget: float
    allocation: Optional[Allocation] = None
    quantity: str = "leakage"

    @property
    def zeta(self) -> Optional[float]:
        return None if self.allocation is None else self.allocation.water_level

    def recompute(self) -> float:
        """Value recomputed from the stored allocation (leakage only)."""
        if self.allocation is None:
            raise ValueError("no allocation stored")
        a = self.allocation
        terms = leakage_terms(a.weights, a.powers)
        if a.mode == "sum":
            return float(np.sum(terms))
        return float(np.mean(terms)) if a.probs is None else float(np.sum(a.probs * terms))

    def to_dict(self) -> dict:
        d = {
            "quantity": self.quantity,
            "regime": self.regime,
            "constraint": self.constraint,
            "budget": self.budget,
            f"{self.quantity}_bits": self.value_bits,
            "zeta": self.zeta,
        }
        if self.allocation is not None:
            d["allocation"] = self.allocation.to_dict()
        return d


@dataclass(frozen=True)
class FadingModel:
    """Discrete distribution of the squared fading gain ``|h|^2``."""

    gains_sq: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        g = np.array(self.gains_sq, dtype=float).ravel()
        p = np.array(self.probs, dtype=float).ravel()
        if g.size == 0 or g.size != p.size:
            raise ValidationError("gains_sq and probs must be nonempty and equally long")
        if np.any(~np.isfinite(g)) or np.any(g < 0):
            raise ValidationError("gains_sq must be finite and nonnegative")
        if np.any(~np.isfinite(p)) or np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValidationError(f"probs must be nonnegative and sum to 1 (sum {math.fsum(p)!r})")
        if not np.any((g > 0) & (p > 0)):
            raise DegenerateFading("every fading state with positive probability has zero gain")
        g.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "gains_sq", g)
        object.__setattr__(self, "probs", p)

    @classmethod
    def constant(cls, gain_sq: float = 1.0) -> FadingModel:
        return cls(np.array([gain_sq]), np.array([1.0]))

    def mean_gain_sq(self) -> float:
        return float(np.sum(self.probs * self.gains_sq))

    def expect(self, values: np.ndarray) -> float:
        return float(np.sum(self.probs * values))

    def to_dict(self) -> dict:
        return {"gains_sq": self.gains_sq.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> FadingModel:
        return cls(np.asarray(d["gains_sq"], dtype=float), np.asarray(d["probs"], dtype=float))


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise NonpositiveInput(f"{name} must be positive and finite, got {value}")
    return value


def _white_bits(signal: float, noise: float) -> float:
    return 0.5 * math.log2(1.0 + signal / noise)


def leakage_white(sigma_x_sq: float, noise_budget: float) -> LeakageReport:
    """``0.5 * log2(1 + sigma_x^2 / N)``, attained by white Gaussian noise of power ``N``."""
    s = _positive("sigma_x_sq", sigma_x_sq)
    n = _positive("noise_budget", noise_budget)
    return LeakageReport(_white_bits(s, n), "white", "noise_power", n)


def leakage_colored(s_x: SpectralDensity, noise_budget: float) -> LeakageReport:
    """Leakage of a colored Gaussian input under mean noise power ``noise_budget``."""
    n = _positive("noise_budget", noise_budget)
    if not np.max(s_x.values) > 0:
        raise AllWeightsZero("input spectrum is identically zero")
    alloc = obfuscating_allocation(s_x.values, n, mode="mean")
    value = float(np.mean(leakage_terms(s_x.values, alloc.powers)))
    return LeakageReport(value, "colored", "noise_power", n, alloc)


def leakage_parallel(eigenvalues, noise_budget: float) -> LeakageReport:
    """Total leakage of independent parallel channels under a total noise budget."""
    n = _positive("noise_budget", noise_budget)
    alloc = obfuscating_allocation(eigenvalues, n, mode="sum")
    value = float(np.sum(leakage_terms(alloc.weights, alloc.powers)))
    return LeakageReport(value, "parallel", "noise_power", n, alloc)


def leakage_output_constrained(s_x: SpectralDensity, output_budget: float) -> LeakageReport:
    """Leakage when the output power is capped; the noise gets ``Y - variance(s_x)``."""
    y = float(output_budget)
    var = s_x.variance()
    if not y > var:
        raise OutputBudgetTooSmall(f"output budget {y:g} must exceed the input variance {var:g}")
    inner = leakage_colored(s_x, y - var)
    return LeakageReport(inner.value_bits, "colored", "output_power", y, inner.allocation)


def _fading_si_allocation(fading: FadingModel, sigma_sq: float, noise_budget: float) -> Allocation:
    # zero-gain states fall below the active threshold and receive no noise
    weights = fading.gains_sq * sigma_sq
    return obfuscating_allocation(weights, noise_budget, mode="mean", probs=fading.probs)


def leakage_fading(fading: FadingModel, sigma_sq: float, noise_budget: float,
                   side_info: bool) -> LeakageReport:
    """Leakage of the fast-fading channel ``y = h * x_hat + z``.

    Without side information the noise is white with power ``N``; with side
    information the noise designer sees each realisation of ``h`` and
    allocates per-state powers with ``E[N_h] = N``.
    """
    s = _positive("sigma_sq", sigma_sq)
    n = _positive("noise_budget", noise_budget)
    if not side_info:
        terms = 0.5 * np.log2(1.0 + fading.gains_sq * s / n)
        return LeakageReport(fading.expect(terms), "fading_no_si", "noise_power", n)
    alloc = _fading_si_allocation(fading, s, n)
    terms = leakage_terms(alloc.weights, alloc.powers)
    return LeakageReport(fading.expect(terms), "fading_si", "noise_power", n, alloc)


def leakage_fading_output(fading: FadingModel, sigma_sq: float, output_budget: float,
                          side_info: bool) -> LeakageReport:
    s = _positive("sigma_sq", sigma_sq)
    y = float(output_budget)
    signal_power = fading.mean_gain_sq() * s
    if not y > signal_power:
        raise OutputBudgetTooSmall(
            f"output budget {y:g} must exceed the faded signal power {signal_power:g}"
        )
    inner = leakage_fading(fading, s, y - signal_power, side_info)
    return LeakageReport(inner.value_bits, inner.regime, "output_power", y, inner.allocation)


def capacity_white(P: float, sigma_z_sq: float) -> LeakageReport:
    p = _positive("P", P)
    z = _positive("sigma_z_sq", sigma_z_sq)
    return LeakageReport(_white_bits(p, z), "white", "input_power", p, quantity="capacity")


def capacity_colored(s_z: SpectralDensity, P: float) -> LeakageReport:
    """Water-filling capacity of colored Gaussian noise ``s_z`` under mean input power ``P``."""
    p = _positive("P", P)
    if np.any(s_z.values == 0):
        raise ZeroNoiseFrequency("noise spectrum vanishes at some frequency: capacity is infinite")
    alloc = water_filling(s_z.values, p, mode="mean")
    value = float(np.mean(0.5 * np.log2(1.0 + alloc.powers / s_z.values)))
    return LeakageReport(value, "colored", "input_power", p, alloc, quantity="capacity")


def capacity_fading(fading: FadingModel, sigma_z_sq: float, P: float,
                    side_info: bool) -> LeakageReport:
    """Ergodic capacity of ``y = h x + z``; with side information the input water-fills over ``h``."""
    z = _positive("sigma_z_sq", sigma_z_sq)
    p = _positive("P", P)
    g = fading.gains_sq
    if not side_info:
        return LeakageReport(fading.expect(0.5 * np.log2(1.0 + g * p / z)),
                             "fading_no_si", "input_power", p, quantity="capacity")
    with np.errstate(divide="ignore", over="ignore"):
        levels = np.where(g > 0, z / g, np.inf)
    alloc = water_filling(levels, p, mode="mean", probs=fading.probs)
    value = fading.expect(0.5 * np.log2(1.0 + g * alloc.powers / z))
    return LeakageReport(value, "fading_si", "input_power", p, alloc, quantity="capacity")


@dataclass(frozen=True)
class Comparison:
    leakage_bits: float
    capacity_bits: float
    holds: bool
    equal: bool

    def to_dict(self) -> dict:
        return {
            "leakage_bits": self.leakage_bits,
            "capacity_bits": self.capacity_bits,
            "gap_bits": self.capacity_bits - self.leakage_bits,
            "leakage_le_capacity": self.holds,
            "equal": self.equal,
        }


Spec = Union[float, SpectralDensity]


def _second_moment(spec: Spec) -> float:
    return spec.variance() if isinstance(spec, SpectralDensity) else _positive("variance", spec)


def compare_leakage_capacity(input_spec: Spec, noise_spec: Spec,
                             P: Optional[float] = None, N: Optional[float] = None,
                             tol: float = 1e-9) -> Comparison:
    """Leakage of ``input_spec`` under noise power ``N`` against capacity of ``noise_spec`` under input power ``P``.

    ``P`` and ``N`` default to the second moments of the two specs; when given
    they must match them. A float spec stands for a white process of that variance.
    """
    px = _second_moment(input_spec)
    nz = _second_moment(noise_spec)
    for name, given, actual in (("P", P, px), ("N", N, nz)):
        if given is not None and abs(given - actual) > 1e-9 * max(1.0, abs(actual)):
            raise MomentMismatch(f"{name}={given:g} does not match the spectrum's second moment {actual:g}")

    if isinstance(input_spec, SpectralDensity):
        L = leakage_colored(input_spec, nz).value_bits
        x_flat = input_spec.is_flat()
    else:
        L = leakage_white(px, nz).value_bits
        x_flat = True
    if isinstance(noise_spec, SpectralDensity):
        C = capacity_colored(noise_spec, px).value_bits
        z_flat = noise_spec.is_flat()
    else:
        C = capacity_white(px, nz).value_bits
        z_flat = True

    equal = abs(L - C) <= tol
    if x_flat and z_flat and not equal:
        raise InconsistentResult(f"flat spectra must give L == C, got L={L!r}, C={C!r}")
    return Comparison(L, C, L <= C + tol, equal)
