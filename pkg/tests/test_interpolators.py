import numpy as np
import pytest
from hypothesis import given, strategies as st

from interp.core_model import Rng, SparseLinearInstance, TrainingSet, WhitenedView, make_training_set
from interp.features import FeatureFamily, build_design
from interp.interpolators import (
    NonPositiveWeight,
    WeightScheme,
    least_squares,
    min_l2_interpolate,
    ridge_as_augmented_interpolation,
    ridge_solve,
    support_of,
    weighted_min_l2_interpolate,
)
from interp.interpolators.oracle import ideal_interpolate, ideal_noise_fit

from oracles import weighted_min_norm_direct


def _ts(n, d, seed, k=2, sigma2=0.1):
    g = Rng(seed)
    A = g.gen.standard_normal((n, d))
    inst = SparseLinearInstance.unit_support(d, min(k, d), sigma2)
    return make_training_set(A, inst, g), inst


@given(n=st.integers(1, 8), extra=st.integers(0, 10), seed=st.integers(0, 5000))
def test_min_l2_interpolates_and_lies_in_row_space(n, extra, seed):
    ts, _ = _ts(n, n + extra, seed)
    res = min_l2_interpolate(ts)
    assert res.residual_norm < 1e-9 * max(1.0, np.linalg.norm(ts.Y))
    # row-space membership: projection onto the null space vanishes
    Q, _ = np.linalg.qr(ts.A.T)
    a = res.alpha_hat
    np.testing.assert_allclose(a, Q @ (Q.T @ a), atol=1e-9)


@given(n=st.integers(1, 6), extra=st.integers(0, 10), seed=st.integers(0, 5000))
def test_weighted_min_l2_matches_direct_formula(n, extra, seed):
    ts, _ = _ts(n, n + extra, seed)
    w = np.random.default_rng(seed).uniform(0.2, 3.0, ts.d)
    res = weighted_min_l2_interpolate(ts, WeightScheme(w))
    np.testing.assert_allclose(res.alpha_hat, weighted_min_norm_direct(ts.A, ts.Y, w), atol=1e-8)
    assert res.objective == pytest.approx(np.linalg.norm(res.alpha_hat / w))


def test_weighted_l2_beats_other_interpolators_in_its_norm():
    ts, _ = _ts(5, 12, 0)
    w = np.linspace(0.5, 2.0, 12)
    best = weighted_min_l2_interpolate(ts, w).alpha_hat
    null = np.linalg.svd(ts.A)[2][5:].T
    g = np.random.default_rng(0)
    for _ in range(50):
        other = best + null @ g.standard_normal(null.shape[1])
        assert np.linalg.norm(other / w) >= np.linalg.norm(best / w) - 1e-12


def test_weight_scheme_validation():
    with pytest.raises(NonPositiveWeight):
        WeightScheme(np.array([1.0, 0.0]))
    with pytest.raises(NonPositiveWeight):
        WeightScheme(np.array([1.0, np.inf]))
    np.testing.assert_array_equal(WeightScheme.uniform(3).w, np.ones(3))


def test_uniform_weights_equal_plain_min_l2():
    ts, _ = _ts(6, 15, 3)
    np.testing.assert_allclose(weighted_min_l2_interpolate(ts, WeightScheme.uniform(15)).alpha_hat,
                               min_l2_interpolate(ts).alpha_hat, atol=1e-12)


@given(n=st.integers(1, 10), d=st.integers(1, 10), seed=st.integers(0, 5000),
       log_lam=st.floats(-3, 2))
def test_ridge_equals_augmented_interpolation(n, d, seed, log_lam):
    ts, _ = _ts(n, d, seed)
    g = np.random.default_rng(seed)
    M = g.standard_normal((d, d))
    Gamma = M @ M.T + 0.3 * np.eye(d)
    lam2 = 10.0 ** log_lam
    a = ridge_solve(ts, lam2, Gamma)
    b = ridge_as_augmented_interpolation(ts, lam2, Gamma)
    assert np.linalg.norm(a - b) <= 1e-8 * max(1.0, np.linalg.norm(a))


def test_ridge_rejects_nonpositive_lambda():
    ts, _ = _ts(3, 4, 0)
    with pytest.raises(ValueError):
        ridge_solve(ts, 0.0)
    with pytest.raises(ValueError):
        ridge_as_augmented_interpolation(ts, -1.0)


def test_least_squares_for_tall_designs():
    ts, _ = _ts(20, 5, 1)
    res = least_squares(ts)
    np.testing.assert_allclose(ts.A.T @ (ts.A @ res.alpha_hat - ts.Y), 0, atol=1e-10)


def test_support_of_uses_relative_threshold():
    np.testing.assert_array_equal(support_of(np.array([1.0, 1e-10, -0.5, 0.0])), [0, 2])
    assert support_of(np.zeros(0)).size == 0


def test_ideal_interpolator_mse_formula_and_optimality():
    g = Rng(4)
    n, d = 6, 20
    M = g.gen.standard_normal((d, d))
    S = M @ M.T / d + 0.5 * np.eye(d)
    fam = FeatureFamily.gaussian_cov(S)
    A, _, view = build_design(fam, None, n, g)
    inst = SparseLinearInstance.unit_support(d, 2, 0.5)
    ts = make_training_set(A, inst, g)
    res, mse = ideal_interpolate(ts, view, inst)
    assert res.residual_norm < 1e-9
    B = view.B
    expected = ts.W @ np.linalg.solve(B @ B.T, ts.W)
    assert mse == pytest.approx(expected, rel=1e-9)
    assert ideal_noise_fit(B, ts.W) == pytest.approx(expected, rel=1e-9)
    err = res.alpha_hat - inst.alpha_star
    assert err @ S @ err == pytest.approx(mse, rel=1e-8)
    # any other interpolator pays at least as much
    null = np.linalg.svd(A)[2][n:].T
    for _ in range(30):
        e2 = err + null @ g.gen.standard_normal(d - n)
        assert e2 @ S @ e2 >= mse * (1 - 1e-10)
    e_l2 = min_l2_interpolate(ts).alpha_hat - inst.alpha_star
    assert e_l2 @ S @ e_l2 >= mse * (1 - 1e-10)


def test_ideal_identity_view_is_noise_min_norm():
    ts, inst = _ts(5, 30, 7)
    res, mse = ideal_interpolate(ts, WhitenedView.identity(ts.A), inst)
    np.testing.assert_allclose(res.alpha_hat - inst.alpha_star, np.linalg.pinv(ts.A) @ ts.W,
                               atol=1e-10)
