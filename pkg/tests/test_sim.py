import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import flat
from leakwise import CovarianceMatrix, design_finite, leakage_white, obfuscating_allocation
from leakwise.allocation import leakage_terms
from leakwise.errors import SingularNoise, TooManyComponents, ValidationError
from leakwise.sim import (
    PATH_BLOCK,
    brute_force_allocation,
    convergence_csv,
    design_fingerprint,
    empirical_mask_audit,
    exact_mi_gaussian,
    sample_gaussian,
    szego_convergence,
)


def test_sample_identity_covariance():
    batch = sample_gaussian(CovarianceMatrix(np.eye(2)), 100_000, seed=7)
    assert batch.data.shape == (100_000, 2)
    emp = batch.data.T @ batch.data / batch.num_paths
    np.testing.assert_allclose(emp, np.eye(2), atol=0.02)


def test_sample_determinism_and_blocks():
    cov = CovarianceMatrix([[2.0, 0.5], [0.5, 1.0]])
    a = sample_gaussian(cov, PATH_BLOCK + 10, seed=3).data
    b = sample_gaussian(cov, PATH_BLOCK + 10, seed=3).data
    assert np.array_equal(a, b)
    # a prefix of paths does not depend on how many paths were requested
    c = sample_gaussian(cov, 100, seed=3).data
    assert np.array_equal(a[:100], c)
    assert not np.array_equal(a, sample_gaussian(cov, PATH_BLOCK + 10, seed=4).data)


def test_sample_empty():
    assert sample_gaussian(CovarianceMatrix(np.zeros((0, 0))), 5, 0).data.shape == (5, 0)
    assert sample_gaussian(CovarianceMatrix(np.eye(2)), 0, 0).data.shape == (0, 2)


def test_exact_mi_examples():
    assert exact_mi_gaussian(CovarianceMatrix([[1.0]]), CovarianceMatrix([[1.0]])) == pytest.approx(0.5)
    assert exact_mi_gaussian(CovarianceMatrix(np.zeros((2, 2))), CovarianceMatrix(np.eye(2))) == 0.0
    mi = exact_mi_gaussian(CovarianceMatrix([[2.0, 1.0], [1.0, 2.0]]), CovarianceMatrix(0.5 * np.eye(2)))
    assert mi == pytest.approx(0.5 * math.log2(21), abs=1e-12)
    with pytest.raises(SingularNoise):
        exact_mi_gaussian(CovarianceMatrix(np.eye(2)), CovarianceMatrix(np.diag([1.0, 0.0])))


def test_brute_force_examples():
    alloc, _ = brute_force_allocation([1.0, 1.0], 0.5, grid_step=1e-3)
    np.testing.assert_allclose(alloc.powers, [0.25, 0.25], atol=1e-9)
    alloc, obj = brute_force_allocation([1.0, 4.0], 1.0)
    np.testing.assert_allclose(alloc.powers, [0.4415, 0.5585], atol=1e-9)
    assert obj == pytest.approx(2.368007741803288, abs=1e-12)
    lag = obfuscating_allocation([1.0, 4.0], 1.0)
    assert abs(float(np.sum(leakage_terms(lag.weights, lag.powers))) - obj) <= 1e-3
    alloc, obj = brute_force_allocation([2.0], 0.3)
    assert alloc.powers[0] == 0.3
    with pytest.raises(TooManyComponents):
        brute_force_allocation([1.0] * 4, 1.0)


def test_brute_force_three_components_matches_double_loop():
    lam = [0.5, 2.0, 1.0]
    alloc, obj = brute_force_allocation(lam, 0.05, grid_step=1e-3)
    best = math.inf
    for k1 in range(1, 50):
        for k2 in range(1, 50 - k1):
            n = np.array([k1, k2, 50 - k1 - k2]) * 1e-3
            best = min(best, float(np.sum(0.5 * np.log2(1 + np.asarray(lam) / n))))
    assert obj == pytest.approx(best, abs=1e-12)


def test_szego_flat():
    limit, rows = szego_convergence(flat(1.0, 1024), 1.0, [0, 4, 32])
    assert limit == pytest.approx(0.5, abs=1e-12)
    for r in rows:
        assert r.per_sample_bits == pytest.approx(0.5, abs=1e-10)


def test_szego_k0_is_white(ar1):
    _, rows = szego_convergence(ar1, 0.5, [0])
    assert rows[0].per_sample_bits == pytest.approx(leakage_white(ar1.variance(), 0.5).value_bits,
                                                    abs=1e-12)


def test_szego_ar1(ar1):
    limit, rows = szego_convergence(ar1, 0.5, [16, 64, 256, 512])
    errs = [r.abs_error for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] / limit < 0.01
    csv = convergence_csv(rows).splitlines()
    assert csv[0] == "K,per_sample_bits,abs_error" and len(csv) == 5


def test_szego_validation(ar1):
    with pytest.raises(ValidationError):
        szego_convergence(ar1, 0.5, [64, 16])


def test_audit_identity():
    cov = CovarianceMatrix(np.eye(2))
    design = design_finite(cov, 0.5)
    rep = empirical_mask_audit(design, cov, 100_000, seed=11)
    assert rep.empirical_distortion == pytest.approx(0.5, rel=0.05)
    assert rep.empirical_mi_bits == pytest.approx(math.log2(5), rel=0.05)
    again = empirical_mask_audit(design, cov, 100_000, seed=11)
    assert rep == again
    assert rep.design_ref == design_fingerprint(design)
    assert set(rep.to_dict()) >= {"design_ref", "empirical_distortion", "empirical_mi_bits",
                                  "num_paths", "seed"}


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_audit_tolerance_scales(seed, dim):
    # distortion is a mean of chi-square sums; a 6-sigma band is ample
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    cov = CovarianceMatrix(a @ a.T + 0.1 * np.eye(dim))
    design = design_finite(cov, 1.0)
    n = 20_000
    rep = empirical_mask_audit(design, cov, n, seed)
    ev = np.linalg.eigvalsh(design.noise_spec.entries)
    sd = math.sqrt(2.0 * float(np.sum(ev ** 2)) / n)
    assert abs(rep.empirical_distortion - design.budget_used) <= 6 * sd


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_logdet_matches_eigen_sum(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    cov = CovarianceMatrix(a @ a.T)
    d = design_finite(cov, float(rng.uniform(0.1, 5)))
    lam = np.asarray(d.details["eigenvalues"])
    n = np.asarray(d.details["eigen_powers"])
    assert exact_mi_gaussian(cov, d.noise_spec) == pytest.approx(float(np.sum(leakage_terms(lam, n))),
                                                                abs=1e-8)
