import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interp.core_model import TrainingSet
from interp.features import NotMultiple, alias_index_set, fourier_features
from interp.fourier_theory import (
    AliasCohort,
    FilterProfile,
    closed_form_weighted_solution,
    contamination,
    contamination_exact,
    empirical_survival_contamination,
    interpolation_kernel,
    interpolation_kernel_dense,
    spiked_survival_approx,
    spiked_weights,
    survival,
    survival_one_pole,
)
from interp.interpolators import WeightScheme, weighted_min_l2_interpolate

from oracles import weighted_min_norm_direct

GRID_N = (2, 4, 8, 16)
GRID_M = (0, 1, 3, 7)  # d/n in {1, 2, 4, 8}


def _weight_sets(d, seed):
    g = np.random.default_rng(seed)
    yield np.ones(d)
    for _ in range(20):
        yield g.uniform(0.1, 3.0, d)
    yield 1.0 / (1.0 + np.arange(d))
    if d > 2:
        yield spiked_weights(d, 2, 0.7)


def test_closed_form_equals_dense_solve_on_grid():
    worst = 0.0
    for n, M in itertools.product(GRID_N, GRID_M):
        d = (M + 1) * n
        x = np.arange(n) / n
        A = fourier_features(x, d)
        for w in _weight_sets(d, n * 100 + M):
            for k in range(n):
                Y = A[:, k].copy()  # pure tone at frequency k
                dense = weighted_min_norm_direct(A, Y, w)
                lib = weighted_min_l2_interpolate(TrainingSet(A, Y, np.zeros(n)), WeightScheme(w))
                closed = closed_form_weighted_solution(k, n, d, w)
                worst = max(worst, np.abs(dense - closed).max(), np.abs(lib.alpha_hat - closed).max())
    assert worst <= 1e-9


@given(n=st.integers(1, 12), M=st.integers(0, 10), seed=st.integers(0, 1000))
def test_survival_forms_and_mass(n, M, seed):
    d = (M + 1) * n
    w = np.random.default_rng(seed).uniform(0.05, 4.0, d)
    for k in range(n):
        su = survival(k, n, d, w)
        assert su == pytest.approx(survival_one_pole(k, n, d, w), abs=1e-12)
        alpha = closed_form_weighted_solution(k, n, d, w)
        # the cohort coefficients always sum to the true coefficient
        assert alpha.sum() == pytest.approx(1.0, abs=1e-12)
        c = contamination_exact(k, n, d, w)
        assert c == pytest.approx(np.linalg.norm(np.delete(alpha, k)), abs=1e-12)
        # noiseless test MSE splits into bleed and contamination
        err = alpha.copy()
        err[k] -= 1.0
        assert err @ err == pytest.approx((1 - su) ** 2 + c ** 2, abs=1e-12)
        assert 0.0 <= su <= 1.0 and contamination(k, n, d, w) >= 0.0


@given(n=st.integers(1, 20), M=st.integers(0, 30))
def test_uniform_weights_survival_is_n_over_d(n, M):
    d = (M + 1) * n
    w = np.ones(d)
    assert survival(0, n, d, w) == pytest.approx(n / d, abs=1e-15)
    # with equal alias weights both contamination forms give sqrt(M)/(M+1)
    assert contamination(0, n, d, w) == pytest.approx(np.sqrt(M) / (M + 1), abs=1e-15)
    assert contamination_exact(0, n, d, w) == pytest.approx(np.sqrt(M) / (M + 1), abs=1e-15)


def test_spec_examples_small_cohorts():
    # n=2, d=4, k*=0, w=(2,1,1,1): V=5, alpha=(4/5, 0, 1/5, 0)
    np.testing.assert_allclose(closed_form_weighted_solution(0, 2, 4, [2.0, 1, 1, 1]),
                               [0.8, 0, 0.2, 0], atol=1e-15)
    assert contamination(0, 2, 4, np.ones(4)) == pytest.approx(0.5)
    assert survival(0, 3, 3, np.ones(3)) == 1.0
    assert contamination(0, 3, 3, np.ones(3)) == 0.0
    big = np.ones(8)
    big[1] = 1e6
    a = closed_form_weighted_solution(1, 4, 8, big)
    assert a[1] == pytest.approx(1.0, abs=1e-11) and a[5] < 1e-11


def test_survival_monotone_in_weights():
    n, d = 4, 16
    w = np.random.default_rng(0).uniform(0.5, 2.0, d)
    base = survival(2, n, d, w)
    up = w.copy()
    up[2] *= 1.01
    assert survival(2, n, d, up) > base
    for j in alias_index_set(2, n, d):
        v = w.copy()
        v[j] *= 1.01
        assert survival(2, n, d, v) < base


def test_strong_prior_filter():
    n, d, s = 32, 32 * 64, 4
    w = spiked_weights(d, s, 0.99)
    for k in range(s):
        assert survival(k, n, d, w) >= 0.9
        assert contamination(k, n, d, w) <= 0.1
    # unfavoured frequencies see flat weights: SU = n/d
    assert survival(s + 1, n, d, w) == pytest.approx(n / d, rel=1e-12)


def test_alias_cohort_and_profile():
    c = AliasCohort.of(1, 4, 12, np.ones(12))
    np.testing.assert_array_equal(c.indices, [1, 5, 9])
    np.testing.assert_array_equal(c.aliases, [5, 9])
    assert c.V == 3.0
    prof = FilterProfile.of(4, 12, np.ones(12))
    np.testing.assert_allclose(prof.survival, 1 / 3)
    with pytest.raises(NotMultiple):
        AliasCohort.of(0, 4, 10, np.ones(10))
    with pytest.raises(ValueError):
        AliasCohort.of(0, 4, 12, np.ones(11))


def test_spiked_weights_mass_and_limit():
    d, s, gamma = 4000, 4, 0.9
    w = spiked_weights(d, s, gamma)
    assert np.sum(w ** 2) == pytest.approx(d)
    assert np.sum(w[:s] ** 2) == pytest.approx(gamma * d)
    n = 32
    d_big = n * 2000
    su = survival(1, n, d_big, spiked_weights(d_big, s, gamma))
    assert su == pytest.approx(spiked_survival_approx(n, s, gamma), rel=2e-3)
    with pytest.raises(ValueError):
        spiked_weights(10, 0, 0.5)
    with pytest.raises(ValueError):
        spiked_weights(10, 2, 1.0)


def test_empirical_survival_contamination_reads_fit():
    n, d = 8, 32
    A = fourier_features(np.arange(n) / n, d)
    Y = A[:, 3].copy()
    res = weighted_min_l2_interpolate(TrainingSet(A, Y, np.zeros(n)), WeightScheme.uniform(d))
    su, c = empirical_survival_contamination(None, res.alpha_hat, 3)
    assert su == pytest.approx(n / d, abs=1e-12)
    # M = 3 aliases: exact value sqrt(3)/4, not sqrt(n/d) = 1/2
    assert c == pytest.approx(np.sqrt(3) / 4, abs=1e-12)
    assert c == pytest.approx(contamination(3, n, d, np.ones(d)), abs=1e-8)
    err = res.alpha_hat.copy()
    err[3] -= 1.0
    assert np.vdot(err, err).real == pytest.approx((1 - su) ** 2 + c ** 2, abs=1e-8)


@pytest.mark.parametrize("n,M", [(4, 0), (5, 2), (8, 7)])
def test_kernel_closed_form_equals_dense(n, M):
    d = n * (M + 1)
    grid = np.linspace(0, 1, 101)
    w = np.random.default_rng(n).uniform(0.3, 2.0, d)
    np.testing.assert_allclose(interpolation_kernel(w, n, d, grid),
                               interpolation_kernel_dense(w, n, d, grid), atol=1e-10)
    # interpolation of the impulse
    k = interpolation_kernel(w, n, d, np.arange(n) / n)
    np.testing.assert_allclose(k, np.eye(n)[0], atol=1e-8)
    with pytest.raises(NotMultiple):
        interpolation_kernel(np.ones(d + 1), n, d + 1, grid)


def test_kernel_uniform_weights_d_equals_n_is_dirichlet():
    n = 7
    x = np.linspace(0, 1, 53)
    k = interpolation_kernel(np.ones(n), n, n, x)
    # (1/n) sum_{j<n} exp(2 pi i j x), summed directly
    direct = np.exp(2j * np.pi * np.outer(x, np.arange(n))).sum(axis=1) / n
    np.testing.assert_allclose(k, direct, atol=1e-12)


def test_parseval_noise_split():
    n = 16
    A = fourier_features(np.arange(n) / n, n)
    W = np.random.default_rng(0).standard_normal(n)
    res = weighted_min_l2_interpolate(TrainingSet(A, W, W), WeightScheme.uniform(n))
    assert np.vdot(res.alpha_hat, res.alpha_hat).real == pytest.approx(W @ W / n, abs=1e-10)
