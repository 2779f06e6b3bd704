"""Power spectra, ARMA models, autocovariances and covariance matrices.

Spectra live on a uniform grid ``omega_j = 2*pi*j/M`` over ``[0, 2*pi)``, so
every frequency-domain average ``(1/2pi) * integral f(omega) d omega`` becomes
the plain mean of ``f`` over the grid.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .errors import ConvergenceFailure, LagTooLarge, NotPsd, UnstableModel, ValidationError

DEFAULT_GRID_POINTS = 4096
GRID_POINTS_ENV = "LEAKWISE_GRID_POINTS"

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


def default_grid_points() -> int:
    """Grid size from ``LEAKWISE_GRID_POINTS``, else 4096."""
    raw = os.environ.get(GRID_POINTS_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_GRID_POINTS
    try:
        m = int(raw)
    except ValueError:
        raise ValidationError(f"{GRID_POINTS_ENV}={raw!r} is not an integer") from None
    if m < 2:
        raise ValidationError(f"{GRID_POINTS_ENV} must be >= 2, got {m}")
    return m


@dataclass(frozen=True)
class FrequencyGrid:
    num_points: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        if int(self.num_points) != self.num_points or self.num_points < 2:
            raise ValidationError(f"grid needs an integer number of points >= 2, got {self.num_points}")
        object.__setattr__(self, "num_points", int(self.num_points))

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.num_points) / self.num_points

    @property
    def weight(self) -> float:
        """Quadrature weight per point, ``2*pi/M``."""
        return 2.0 * np.pi / self.num_points

    def mean(self, values) -> float:
        """Approximate ``(1/2pi) * integral over [0, 2pi)`` by the grid mean."""
        return float(np.mean(values))


@dataclass(frozen=True)
class SpectralDensity:
    """Nonnegative power spectrum sampled on a :class:`FrequencyGrid`.

    Values must satisfy ``S(omega) == S(2*pi - omega)`` (real process); small
    floating point asymmetry is averaged away, anything larger is rejected.
    """

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != self.grid.num_points:
            raise ValidationError(
                f"spectrum needs {self.grid.num_points} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("spectrum values must be finite")
        if np.any(v < 0):
            raise ValidationError(f"spectrum values must be nonnegative (min {v.min():g})")
        mirror = np.roll(v[::-1], 1)  # mirror[j] = v[(M - j) % M]
        scale = max(float(np.max(v)), np.finfo(float).tiny)
        asym = float(np.max(np.abs(v - mirror)))
        if asym > 1e-9 * scale:
            raise ValidationError(
                f"spectrum is not real-symmetric: max |S(w) - S(2pi - w)| = {asym:g}"
            )
        object.__setattr__(self, "values", _frozen(0.5 * (v + mirror)))

    @classmethod
    def flat(cls, value: float, grid: FrequencyGrid | None = None) -> SpectralDensity:
        grid = grid or FrequencyGrid(default_grid_points())
        return cls(grid, np.full(grid.num_points, float(value)))

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray],
                      grid: FrequencyGrid | None = None) -> SpectralDensity:
        grid = grid or FrequencyGrid(default_grid_points())
        return cls(grid, np.broadcast_to(fn(grid.frequencies), (grid.num_points,)))

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    def variance(self) -> float:
        return self.grid.mean(self.values)

    def is_flat(self, rtol: float = 1e-12) -> bool:
        v = self.values
        return bool(np.ptp(v) <= rtol * max(float(np.max(v)), np.finfo(float).tiny))

    def to_dict(self) -> dict:
        return {"grid_points": self.grid.num_points, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> SpectralDensity:
        values = d["values"]
        m = int(d.get("grid_points", len(values)))
        return cls(FrequencyGrid(m), np.asarray(values, dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega", "value"])
        for om, val in zip(self.frequencies, self.values):
            w.writerow([repr(float(om)), repr(float(val))])
        return buf.getvalue()


def _companion_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Roots in z of ``1 + c_1 z^-1 + ... + c_n z^-n``, from the companion matrix."""
    c = np.asarray(coeffs, dtype=float)
    # trailing zero coefficients only add roots at the origin
    if c.size == 0 or not np.any(c):
        return np.zeros(0)
    n = c.size
    comp = np.zeros((n, n))
    comp[0, :] = -c
    if n > 1:
        comp[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp)


@dataclass(frozen=True)
class ArmaModel:
    """``x_k = -sum g_j x_{k-j} + e_k + sum f_i e_{k-i}`` with ``Var(e) = innovation_variance``.

    Parameters
    ----------
    ma_coeffs : sequence of float
        ``f_1..f_p``.
    ar_coeffs : sequence of float
        ``g_1..g_q``; note the sign convention, AR(1) with pole 0.5 is ``g_1 = -0.5``.
    innovation_variance : float
        Variance of the white driving sequence.
    """

    ma_coeffs: tuple = ()
    ar_coeffs: tuple = ()
    innovation_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ma_coeffs", tuple(float(c) for c in self.ma_coeffs))
        object.__setattr__(self, "ar_coeffs", tuple(float(c) for c in self.ar_coeffs))
        if not (self.innovation_variance > 0) or not np.isfinite(self.innovation_variance):
            raise ValidationError(
                f"innovation variance must be positive, got {self.innovation_variance}"
            )

    def check(self) -> None:
        """Raise :class:`UnstableModel` unless stable and minimum phase."""
        for name, coeffs in (("AR (stability)", self.ar_coeffs), ("MA (minimum phase)", self.ma_coeffs)):
            roots = _companion_roots(coeffs)
            if roots.size and np.max(np.abs(roots)) >= 1.0:
                mag = float(np.max(np.abs(roots)))
                raise UnstableModel(f"{name} polynomial has a root of magnitude {mag:.6g} >= 1")

    def to_dict(self) -> dict:
        return {
            "ma": list(self.ma_coeffs),
            "ar": list(self.ar_coeffs),
            "innovation_variance": self.innovation_variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ArmaModel:
        return cls(tuple(d.get("ma", ())), tuple(d.get("ar", ())), float(d["innovation_variance"]))


def arma_spectrum(model: ArmaModel, grid: FrequencyGrid | None = None) -> SpectralDensity:
    """``S(w) = |F(e^{jw})|^2 * sigma^2`` for the ARMA transfer function ``F``."""
    model.check()
    grid = grid or FrequencyGrid(default_grid_points())
    w = grid.frequencies
    num = np.ones_like(w, dtype=complex)
    for i, f in enumerate(model.ma_coeffs, start=1):
        num += f * np.exp(-1j * i * w)
    den = np.ones_like(w, dtype=complex)
    for j, g in enumerate(model.ar_coeffs, start=1):
        den += g * np.exp(-1j * j * w)
    return SpectralDensity(grid, np.abs(num / den) ** 2 * model.innovation_variance)


def spectrum_to_autocov(s: SpectralDensity, max_lag: int) -> np.ndarray:
    """Autocovariance ``R(0..max_lag)`` by inverse DFT of the sampled spectrum."""
    m = s.grid.num_points
    if max_lag < 0 or 2 * max_lag >= m:
        raise LagTooLarge(f"max_lag must satisfy 0 <= max_lag < M/2 = {m / 2:g}, got {max_lag}")
    # symmetric input => the inverse DFT is real and equals the cosine sum
    r = np.fft.ifft(s.values).real
    return r[: max_lag + 1].copy()


def autocov_to_spectrum(r: Sequence[float], grid: FrequencyGrid) -> SpectralDensity:
    """``S(w) = R(0) + 2 * sum_{k>=1} R(k) cos(k w)`` on ``grid``."""
    r = np.asarray(r, dtype=float)
    w = grid.frequencies
    k = np.arange(1, r.size)
    vals = r[0] + 2.0 * np.cos(np.outer(w, k)) @ r[1:]
    return SpectralDensity(grid, np.clip(vals, 0.0, None))


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric PSD matrix; slight floating point asymmetry is averaged out."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        a = np.zeros((0, 0)) if a.size == 0 else np.atleast_2d(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"covariance must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("covariance entries must be finite")
        if a.size:
            scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
            if np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
                raise ValidationError("covariance matrix is not symmetric")
            a = 0.5 * (a + a.T)
            lam = np.linalg.eigvalsh(a)
            if lam[0] < -PSD_RTOL * max(lam[-1], 0.0):
                raise NotPsd(
                    f"covariance has eigenvalue {lam[0]:.3g} below -{PSD_RTOL:g} x largest ({lam[-1]:.3g})"
                )
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def to_dict(self) -> dict:
        return {"dim": self.dim, "rows": self.entries.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> CovarianceMatrix:
        rows = np.asarray(d["rows"], dtype=float).reshape(int(d["dim"]), int(d["dim"]))
        return cls(rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.entries:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def toeplitz_from_autocov(r: Sequence[float], dim: int) -> CovarianceMatrix:
    r = np.asarray(r, dtype=float)
    if dim < 0 or r.size < dim:
        raise ValidationError(f"need at least {dim} autocovariance lags, got {r.size}")
    return CovarianceMatrix(linalg.toeplitz(r[:dim]))


@dataclass(frozen=True)
class EigenSpectrum:
    """``U diag(eigenvalues) U^T`` with eigenvalues clipped at 0 and sorted descending."""

    eigenvalues: np.ndarray
    basis: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.T


def eig_sym(c: CovarianceMatrix) -> EigenSpectrum:
    if c.dim == 0:
        return EigenSpectrum(_frozen(np.zeros(0)), _frozen(np.zeros((0, 0))))
    try:
        lam, u = np.linalg.eigh(c.entries)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"symmetric eigensolver did not converge: {exc}") from exc
    order = np.argsort(lam, kind="stable")[::-1]
    lam = np.clip(lam[order], 0.0, None)
    return EigenSpectrum(_frozen(lam), _frozen(u[:, order]))


def load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
