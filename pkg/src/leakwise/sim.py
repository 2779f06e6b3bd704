"""Independent checks: sampling, exact Gaussian MI, brute-force allocation,
finite-horizon convergence and Monte Carlo audits of designed masks."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .allocation import Allocation
from .errors import SingularNoise, TooManyComponents, ValidationError
from .leakage import leakage_colored
from .mask import MaskDesign, design_finite
from .spectral import CovarianceMatrix, SpectralDensity, eig_sym, spectrum_to_autocov, toeplitz_from_autocov

# paths per RNG substream; fixed so results do not depend on how blocks are scheduled
PATH_BLOCK = 4096


@dataclass(frozen=True)
class SampleBatch:
    num_paths: int
    horizon: int
    data: np.ndarray  # (num_paths, horizon)
    seed: int


def _substream(seed: int, key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(key),))
    return np.random.Generator(np.random.Philox(ss))


def symmetric_sqrt(cov: CovarianceMatrix) -> np.ndarray:
    eig = eig_sym(cov)
    return (eig.basis * np.sqrt(eig.eigenvalues)) @ eig.basis.T


def sample_gaussian(cov: CovarianceMatrix, num_paths: int, seed: int) -> SampleBatch:
    """Draw ``num_paths`` zero-mean rows with covariance ``cov``.

    Paths are generated in fixed blocks of ``PATH_BLOCK``, each with its own
    Philox substream keyed by ``(seed, block index)``.
    """
    if num_paths < 0:
        raise ValidationError("num_paths must be nonnegative")
    dim = cov.dim
    data = np.empty((num_paths, dim))
    if dim and num_paths:
        root = symmetric_sqrt(cov)
        for b, start in enumerate(range(0, num_paths, PATH_BLOCK)):
            stop = min(start + PATH_BLOCK, num_paths)
            z = _substream(seed, b).standard_normal((stop - start, dim))
            data[start:stop] = z @ root
    return SampleBatch(num_paths, dim, data, int(seed))


def _chol_logdet(a: np.ndarray) -> float:
    c, lower = linalg.cho_factor(a, lower=True, check_finite=True)
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def exact_mi_gaussian(cov_x: CovarianceMatrix, cov_n: CovarianceMatrix) -> float:
    """``0.5 * log2(det(cov_x + cov_n) / det(cov_n))`` via Cholesky factors."""
    if cov_x.dim != cov_n.dim:
        raise ValidationError(f"dimension mismatch: {cov_x.dim} vs {cov_n.dim}")
    if cov_x.dim == 0:
        return 0.0
    try:
        ld_n = _chol_logdet(cov_n.entries)
    except linalg.LinAlgError:
        raise SingularNoise("noise covariance is not positive definite") from None
    ld_y = _chol_logdet(cov_x.entries + cov_n.entries)
    return 0.5 * (ld_y - ld_n) / math.log(2.0)


def _objective_on_grid(lam: float, n: np.ndarray) -> np.ndarray:
    return 0.5 * np.log2(1.0 + lam / n)


def brute_force_allocation(weights, budget: float, grid_step: float = 1e-4):
    """Exhaustive search over the simplex grid ``{N : sum N = budget, N_i >= grid_step}``.

    All components but the last take values ``k * grid_step``; the last one
    absorbs the remainder. Returns the best :class:`Allocation` and its
    objective ``sum 0.5 * log2(1 + lambda_i / N_i)``.

    For three components the search is a min-plus convolution: the
    objective is separable, so the best ``(N_1, N_2)`` for each value of
    ``N_1 + N_2`` is found first. This visits the same grid points as the
    double loop.
    """
    lam = np.asarray(weights, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValidationError("weights must be a nonempty 1-D sequence")
    if lam.size > 3:
        raise TooManyComponents(f"brute force handles at most 3 components, got {lam.size}")
    if not grid_step > 0 or not budget > 0:
        raise ValidationError("grid_step and budget must be positive")
    m = lam.size
    if m == 1:
        powers = np.array([float(budget)])
        return _bf_result(lam, powers, budget)

    n = int(math.floor(budget / grid_step + 1e-9))
    ks = np.arange(1, n + 1)
    pts = ks * grid_step

    def last(s):
        return budget - s * grid_step

    if m == 2:
        rem = last(ks)
        ok = rem >= grid_step * (1 - 1e-9)
        obj = _objective_on_grid(lam[0], pts[ok]) + _objective_on_grid(lam[1], rem[ok])
        i = int(np.argmin(obj))
        powers = np.array([pts[ok][i], rem[ok][i]])
        return _bf_result(lam, powers, budget)

    f1 = _objective_on_grid(lam[0], pts)
    f2 = _objective_on_grid(lam[1], pts)
    best = (np.inf, 0, 0)
    # s = k1 + k2 ranges so that the third component keeps at least one step
    for s in range(2, n + 1):
        rem = last(s)
        if rem < grid_step * (1 - 1e-9):
            break
        k1 = np.arange(1, s)
        pair = f1[k1 - 1] + f2[s - k1 - 1]
        j = int(np.argmin(pair))
        val = pair[j] + _objective_on_grid(lam[2], rem)
        if val < best[0]:
            best = (val, int(k1[j]), s)
    _, k1, s = best
    powers = np.array([k1 * grid_step, (s - k1) * grid_step, last(s)])
    return _bf_result(lam, powers, budget)


def _bf_result(lam, powers, budget):
    obj = float(np.sum(_objective_on_grid(lam, powers)))
    return Allocation(powers, float("nan"), float(budget), lam, "sum", "brute_force"), obj


@dataclass(frozen=True)
class ConvergenceRow:
    horizon: int
    per_sample_bits: float
    abs_error: float


def szego_convergence(s_x: SpectralDensity, noise_budget: float, horizons) -> tuple[float, list[ConvergenceRow]]:
    """Per-sample finite-block leakage for each block length ``K+1``.

    Each block uses the Toeplitz covariance implied by ``s_x`` and a total
    distortion of ``(K+1) * noise_budget``. Returns the stationary limit and
    one row per ``K``.
    """
    horizons = [int(k) for k in horizons]
    if any(k < 0 for k in horizons) or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValidationError("horizons must be nonnegative and strictly increasing")
    limit = leakage_colored(s_x, noise_budget).value_bits
    r = spectrum_to_autocov(s_x, max(horizons)) if horizons else np.zeros(1)
    rows = []
    for K in horizons:
        cov = toeplitz_from_autocov(r, K + 1)
        design = design_finite(cov, (K + 1) * noise_budget)
        per = design.achieved_leakage_bits / (K + 1)
        rows.append(ConvergenceRow(K, per, abs(per - limit)))
    return limit, rows


def convergence_csv(rows) -> str:
    lines = ["K,per_sample_bits,abs_error"]
    lines += [f"{r.horizon},{r.per_sample_bits!r},{r.abs_error!r}" for r in rows]
    return "\n".join(lines) + "\n"


def design_fingerprint(design: MaskDesign) -> str:
    blob = json.dumps(design.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class AuditReport:
    design_ref: str
    design_distortion: float
    design_mi_bits: float
    empirical_distortion: float
    empirical_mi_bits: float
    num_paths: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "design_ref": self.design_ref,
            "design_distortion": self.design_distortion,
            "design_mi_bits": self.design_mi_bits,
            "empirical_distortion": self.empirical_distortion,
            "empirical_mi_bits": self.empirical_mi_bits,
            "num_paths": self.num_paths,
            "seed": self.seed,
        }


def empirical_mask_audit(design: MaskDesign, cov_x: CovarianceMatrix, num_paths: int,
                         seed: int) -> AuditReport:
    """Monte Carlo check of a finite-time design.

    Draws data and mask independently, forms ``x_bar = x + n`` and
    estimates the total distortion and the plug-in Gaussian MI from the
    sample covariances.
    """
    if design.regime != "finite_time" or not isinstance(design.noise_spec, CovarianceMatrix):
        raise ValidationError("the audit needs a finite-time design")
    cov_n = design.noise_spec
    if cov_n.dim != cov_x.dim:
        raise ValidationError("design and data covariance differ in dimension")
    seed_x, seed_n = (int(c.generate_state(1, np.uint64)[0] >> np.uint64(1))
                      for c in np.random.SeedSequence(int(seed)).spawn(2))
    x = sample_gaussian(cov_x, num_paths, seed_x).data
    n = sample_gaussian(cov_n, num_paths, seed_n).data
    x_bar = x + n
    distortion = float(np.mean(np.sum((x_bar - x) ** 2, axis=1)))
    sx = CovarianceMatrix(x.T @ x / num_paths)
    sn = CovarianceMatrix(n.T @ n / num_paths)
    mi = exact_mi_gaussian(sx, sn)
    return AuditReport(design_fingerprint(design), design.budget_used, design.achieved_leakage_bits,
                       distortion, mi, int(num_paths), int(seed))
