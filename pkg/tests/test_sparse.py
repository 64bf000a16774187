import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interp.core_model import Rng, SparseLinearInstance, TrainingSet, make_training_set
from interp.interpolators import min_l2_interpolate
from interp.sparse import (
    DegenerateResidual,
    LassoConfig,
    MaxIterExceeded,
    OmpConfig,
    Stopping,
    basis_pursuit,
    bland_simplex,
    default_lasso_lambda,
    default_sqrt_lasso_gamma,
    hybrid_error_bound,
    hybrid_interpolate,
    incoherence,
    lasso_cd,
    lasso_kkt_residual,
    lasso_objective,
    omp,
    restricted_eigenvalue_estimate,
    solve_bp_lp,
    sqrt_lasso,
    sqrt_lasso_kkt_residual,
    sqrt_lasso_objective,
)

from oracles import admm_basis_pursuit, fista_lasso, lasso_value, sqrt_lasso_by_scaled_lasso


def _ts(A, Y):
    return TrainingSet(np.asarray(A, float), np.asarray(Y, float), np.zeros(len(Y)))


def _noise_instance(n, d, seed):
    g = np.random.default_rng(seed)
    return _ts(g.standard_normal((n, d)), g.standard_normal(n))


# --- OMP -------------------------------------------------------------------

def test_omp_orthogonal_design_orders_by_magnitude():
    Y = np.array([0.1, -3.0, 2.0])
    res = omp(_ts(np.eye(3), Y))
    assert res.diagnostics["selection_order"] == [1, 2, 0]
    np.testing.assert_allclose(res.alpha_hat, Y)


def test_omp_ties_go_to_lowest_index():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    A[:, 1] = [1.0, 0.0]
    res = omp(_ts(A, [1.0, 0.0]), OmpConfig.fixed_steps(1))
    assert res.diagnostics["selection_order"] == [0]


def test_omp_one_sparse_recovery():
    g = np.random.default_rng(0)
    A = g.standard_normal((30, 100))
    alpha = np.zeros(100)
    alpha[0] = 5.0
    res = omp(_ts(A, A @ alpha))
    assert res.diagnostics["selection_order"][0] == 0
    assert res.diagnostics["steps"] == 1
    np.testing.assert_allclose(res.alpha_hat, alpha, atol=1e-10)


@given(seed=st.integers(0, 10_000))
def test_omp_to_completion_pure_noise(seed):
    ts = _noise_instance(8, 32, seed)
    res = omp(ts)
    S = np.array(res.diagnostics["selection_order"])
    assert S.size == 8 and np.unique(S).size == 8
    direct = np.linalg.solve(ts.A[:, S], ts.Y)
    np.testing.assert_allclose(res.alpha_hat[S], direct, atol=1e-8)
    assert res.residual_norm <= 1e-8 * np.linalg.norm(ts.Y)


def test_omp_stopping_rules():
    g = Rng(3)
    A = g.gen.standard_normal((100, 400))
    inst = SparseLinearInstance.unit_support(400, 5, 0.01)
    ts = make_training_set(A, inst, g)
    res = omp(ts, OmpConfig.residual_threshold(0.1, 0.5))
    assert res.diagnostics["stop_reason"] == "threshold"
    r = ts.Y - A @ res.alpha_hat
    assert np.abs(A.T @ r).max() <= 0.1 * math.sqrt(2 * 1.5 * math.log(400))
    assert set(range(5)) <= set(res.support.tolist())
    fixed = omp(ts, OmpConfig.fixed_steps(5))
    assert sorted(fixed.diagnostics["selection_order"]) == [0, 1, 2, 3, 4]
    for bad in (dict(stopping=Stopping.RESIDUAL_THRESHOLD, sigma=1.0, eta=0.0),
                dict(stopping=Stopping.FIXED_STEPS, k0=0)):
        with pytest.raises(ValueError):
            OmpConfig(**bad)
    with pytest.raises(ValueError):
        omp(_ts(np.zeros((2, 3)), [1.0, 1.0]))


# --- basis pursuit -----------------------------------------------------------

def test_bp_identity_and_scalar_vertex():
    Y = np.array([1.0, -2.0, 0.5])
    res = basis_pursuit(_ts(np.eye(3), Y))
    np.testing.assert_allclose(res.alpha_hat, Y)
    assert res.objective == pytest.approx(3.5)
    res = basis_pursuit(_ts([[2.0, 1.0]], [2.0]))
    np.testing.assert_allclose(res.alpha_hat, [1.0, 0.0])
    assert res.objective == pytest.approx(1.0)


@pytest.mark.parametrize("engine", ["homotopy", "highs", "bland"])
def test_bp_engines_agree_with_admm(engine):
    for seed in range(5):
        ts = _noise_instance(5, 15, seed)
        res = basis_pursuit(ts, engine=engine)
        ref = admm_basis_pursuit(ts.A, ts.Y)
        assert res.objective == pytest.approx(np.abs(ref).sum(), abs=1e-6)
        assert res.residual_norm < 1e-9
        assert res.support.size <= 5
        assert res.diagnostics["uv_overlap"] == 0
        assert res.objective == pytest.approx(res.diagnostics["lp_objective"], abs=1e-8)


def test_bp_beats_random_feasible_points():
    ts = _noise_instance(5, 15, 42)
    best = basis_pursuit(ts).objective
    base = np.linalg.pinv(ts.A) @ ts.Y
    null = np.linalg.svd(ts.A)[2][5:].T
    g = np.random.default_rng(0)
    for _ in range(1000):
        x = base + null @ (g.standard_normal(10) * g.uniform(0.01, 3))
        assert np.abs(x).sum() >= best - 1e-10


def test_bp_support_exactly_n_on_noise():
    hits = sum(basis_pursuit(_noise_instance(20, 80, s)).support.size == 20 for s in range(40))
    assert hits >= 38


def test_bland_simplex_small_lp():
    # min x1 + x2 s.t. x1 + 2 x2 = 4, x >= 0 -> (0, 2)
    z = bland_simplex(np.array([[1.0, 2.0]]), np.array([4.0]), np.array([1.0, 1.0]))
    np.testing.assert_allclose(z, [0.0, 2.0])


def test_lp_split_is_disjoint_and_feasible():
    ts = _noise_instance(10, 40, 1)
    lp = solve_bp_lp(ts.A, ts.Y, engine="highs")
    assert np.all(lp.u >= 0) and np.all(lp.v >= 0)
    assert not np.any((lp.u > 1e-9) & (lp.v > 1e-9))
    np.testing.assert_allclose(np.hstack([ts.A, -ts.A]) @ np.concatenate([lp.u, lp.v]), ts.Y,
                               atol=1e-8)
    assert lp.basis.size <= 10


def test_bp_rejects_complex():
    with pytest.raises(TypeError):
        basis_pursuit(TrainingSet(np.ones((1, 2), complex), np.ones(1, complex), np.zeros(1)))


# --- Lasso -------------------------------------------------------------------

def test_lasso_scalar_and_kill_condition():
    a = lasso_cd(_ts([[1.0]], [3.0]), LassoConfig(lambda_n=1.0))
    np.testing.assert_allclose(a, [2.0])
    ts = _noise_instance(20, 50, 0)
    lam = np.abs(ts.A.T @ ts.Y).max() / 20
    assert not lasso_cd(ts, LassoConfig(lambda_n=lam)).any()
    with pytest.raises(ValueError):
        lasso_cd(ts, LassoConfig(lambda_n=0.0))


@given(seed=st.integers(0, 10_000), frac=st.floats(0.05, 0.9))
def test_lasso_kkt_and_oracle(seed, frac):
    ts = _noise_instance(25, 60, seed)
    lam = frac * np.abs(ts.A.T @ ts.Y).max() / 25
    a, info = lasso_cd(ts, LassoConfig(lambda_n=lam), return_info=True)
    assert info["converged"] and lasso_kkt_residual(ts.A, ts.Y, a, lam) <= 1e-8
    ref = fista_lasso(ts.A, ts.Y, lam, iters=20000)
    assert lasso_objective(ts.A, ts.Y, a, lam) <= lasso_value(ts.A, ts.Y, ref, lam) + 1e-6


def test_lasso_random_order_same_optimum():
    ts = _noise_instance(30, 90, 5)
    lam = 0.2 * np.abs(ts.A.T @ ts.Y).max() / 30
    a = lasso_cd(ts, LassoConfig(lambda_n=lam))
    b = lasso_cd(ts, LassoConfig(lambda_n=lam, random_order=True, seed=3))
    np.testing.assert_allclose(a, b, atol=1e-7)


def test_lasso_max_iter_warns():
    ts = _noise_instance(30, 200, 1)
    lam = 0.01 * np.abs(ts.A.T @ ts.Y).max() / 30
    with pytest.warns(MaxIterExceeded):
        lasso_cd(ts, LassoConfig(lambda_n=lam, max_iter=1, kkt_tol=1e-30))


def test_default_parameters():
    assert default_lasso_lambda(0.1, 200, 800) == pytest.approx(0.2 * math.sqrt(2 * math.log(800) / 200))
    assert default_sqrt_lasso_gamma(200, 800) == pytest.approx(2 * math.sqrt(2 * math.log(800) / 200))


# --- square-root Lasso ----------------------------------------------------------

def test_sqrt_lasso_zero_when_gamma_large():
    ts = _noise_instance(20, 40, 2)
    g0 = np.abs(ts.A.T @ ts.Y).max() / (math.sqrt(20) * np.linalg.norm(ts.Y))
    assert not sqrt_lasso(ts, LassoConfig(gamma_n=1.01 * g0)).any()
    with pytest.raises(ValueError):
        sqrt_lasso(ts, LassoConfig(gamma_n=-1.0))


@given(seed=st.integers(0, 10_000), frac=st.floats(0.1, 0.9))
def test_sqrt_lasso_kkt_equivariance_and_lasso_link(seed, frac):
    g = np.random.default_rng(seed)
    n, d = 30, 60
    A = g.standard_normal((n, d))
    alpha = np.zeros(d)
    alpha[:3] = 2.0
    Y = A @ alpha + 0.5 * g.standard_normal(n)
    ts = _ts(A, Y)
    gamma = frac * np.abs(A.T @ Y).max() / (math.sqrt(n) * np.linalg.norm(Y))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateResidual)
        a, info = sqrt_lasso(ts, LassoConfig(gamma_n=gamma), return_info=True)
        b = sqrt_lasso(_ts(A, 7 * Y), LassoConfig(gamma_n=gamma))
    assert np.abs(b - 7 * a).max() <= 1e-6 * max(1.0, np.abs(7 * a).max())
    if not info["fallback_bp"]:
        assert sqrt_lasso_kkt_residual(A, Y, a, gamma) <= 1e-8
        # same point solves the Lasso at lambda = gamma |r| / sqrt(n)
        lam = gamma * np.linalg.norm(Y - A @ a) / math.sqrt(n)
        assert lasso_kkt_residual(A, Y, a, lam) <= 1e-8


def test_sqrt_lasso_matches_scaled_lasso_oracle():
    g = np.random.default_rng(11)
    n, d = 40, 100
    A = g.standard_normal((n, d))
    Y = A[:, :4] @ np.array([1.0, -1.0, 2.0, 0.5]) + 0.3 * g.standard_normal(n)
    gamma = 1.1 * math.sqrt(2 * math.log(2 * d / 0.05) / n)
    a = sqrt_lasso(_ts(A, Y), LassoConfig(gamma_n=gamma))
    ref = sqrt_lasso_by_scaled_lasso(A, Y, gamma)
    assert sqrt_lasso_objective(A, Y, a, gamma) <= sqrt_lasso_objective(A, Y, ref, gamma) + 1e-7


def test_sqrt_lasso_degenerate_falls_back_to_bp():
    ts = _noise_instance(10, 200, 4)
    with pytest.warns(DegenerateResidual):
        a, info = sqrt_lasso(ts, LassoConfig(gamma_n=1e-4), return_info=True)
    assert info["fallback_bp"]
    np.testing.assert_allclose(a, basis_pursuit(ts).alpha_hat, atol=1e-10)


# --- hybrid ------------------------------------------------------------------

def test_hybrid_zero_first_stage_is_min_l2():
    ts = _noise_instance(10, 30, 0)
    h = hybrid_interpolate(ts, lambda t: np.zeros(t.d))
    np.testing.assert_allclose(h.alpha_hat, min_l2_interpolate(ts).alpha_hat, atol=1e-12)


def test_hybrid_oracle_first_stage_pays_ideal_cost():
    g = Rng(1)
    A = g.gen.standard_normal((20, 100))
    inst = SparseLinearInstance.unit_support(100, 3, 0.1)
    ts = make_training_set(A, inst, g)
    h = hybrid_interpolate(ts, lambda t: inst.alpha_star, inst)
    err = h.alpha_hat - inst.alpha_star
    cost = ts.W @ np.linalg.solve(A @ A.T, ts.W)
    assert err @ err == pytest.approx(cost, rel=1e-9)
    assert h.diagnostics["delta_norm2"] == pytest.approx(cost, rel=1e-9)
    assert h.diagnostics["first_stage_est_error"] == 0.0


def test_hybrid_lasso_rate_and_bound():
    n, d, k, s2 = 200, 2000, 4, 0.01
    mses = []
    for seed in range(10):
        g = Rng(seed)
        A = g.gen.standard_normal((n, d))
        inst = SparseLinearInstance.unit_support(d, k, s2)
        ts = make_training_set(A, inst, g)
        lam = default_lasso_lambda(math.sqrt(s2), n, d)
        h = hybrid_interpolate(ts, lambda t: lasso_cd(t, LassoConfig(lambda_n=lam)), inst)
        assert h.residual_norm < 1e-8
        err = h.alpha_hat - inst.alpha_star
        bound = hybrid_error_bound(ts, h.diagnostics["first_stage_est_error"],
                                   h.diagnostics["first_stage_pred_error"])
        assert err @ err <= bound
        mses.append(err @ err)
    rate = s2 * k * math.log(d) / n + s2 * n / d
    assert np.median(mses) <= 40 * rate


def test_design_diagnostics():
    assert incoherence(np.eye(3)) == 0.0
    g = np.random.default_rng(0)
    A = g.standard_normal((200, 50))
    kappa = restricted_eigenvalue_estimate(A, np.arange(3), Rng(0), n_samples=300)
    s = np.linalg.svd(A / math.sqrt(200), compute_uv=False)
    assert s[-1] ** 2 - 1e-12 <= kappa <= s[0] ** 2 + 1e-12
