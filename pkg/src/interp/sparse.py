"""Sparsity-seeking estimators and interpolators.

* orthogonal matching pursuit with three stopping rules
* basis pursuit (minimum l1 interpolation) as a linear program
* Lagrangian Lasso by cyclic coordinate descent
* square-root Lasso by alternating scale and Lasso updates
* the two-step hybrid: sparse first stage plus min-l2 fit of its residual
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq, linprog

from .bounds import pairwise_incoherence
from .core_model import (
    DEFAULT_RANK_RTOL,
    InterpError,
    Rng,
    SparseLinearInstance,
    TrainingSet,
    as_rng,
    min_norm_solve,
)
from .interpolators import InterpolatorResult
from .metrics import estimation_and_prediction_error


class NumericalBreakdown(InterpError):
    pass


class Infeasible(InterpError):
    pass


class SimplexCycling(InterpError):
    pass


class MaxIterExceeded(RuntimeWarning):
    pass


class DegenerateResidual(RuntimeWarning):
    pass


# ---------------------------------------------------------------------------
# Configuration types
# ---------------------------------------------------------------------------

class Stopping(enum.Enum):
    TO_COMPLETION = "to_completion"
    RESIDUAL_THRESHOLD = "residual_threshold"
    FIXED_STEPS = "fixed_steps"


@dataclass(frozen=True)
class OmpConfig:
    stopping: Stopping = Stopping.TO_COMPLETION
    sigma: float | None = None
    eta: float | None = None
    k0: int | None = None
    residual_tol: float = 1e-12

    def __post_init__(self):
        if self.stopping is Stopping.RESIDUAL_THRESHOLD:
            if self.sigma is None or self.sigma < 0 or self.eta is None or self.eta <= 0:
                raise ValueError("residual threshold needs sigma >= 0 and eta > 0")
        if self.stopping is Stopping.FIXED_STEPS and (self.k0 is None or self.k0 < 1):
            raise ValueError("fixed steps needs k0 >= 1")

    @classmethod
    def to_completion(cls):
        return cls(Stopping.TO_COMPLETION)

    @classmethod
    def residual_threshold(cls, sigma, eta):
        return cls(Stopping.RESIDUAL_THRESHOLD, sigma=float(sigma), eta=float(eta))

    @classmethod
    def fixed_steps(cls, k0):
        return cls(Stopping.FIXED_STEPS, k0=int(k0))


@dataclass(frozen=True)
class LassoConfig:
    lambda_n: float | None = None
    gamma_n: float | None = None
    max_iter: int = 10000
    kkt_tol: float = 1e-8
    random_order: bool = False
    seed: int = 0


@dataclass(frozen=True)
class LpSolution:
    u: np.ndarray
    v: np.ndarray
    basis: np.ndarray
    objective: float

    @property
    def alpha(self) -> np.ndarray:
        return self.u - self.v


def default_lasso_lambda(sigma: float, n: int, d: int) -> float:
    return 2.0 * sigma * math.sqrt(2.0 * math.log(d) / n)


def default_sqrt_lasso_gamma(n: int, d: int) -> float:
    return 2.0 * math.sqrt(2.0 * math.log(d) / n)


# ---------------------------------------------------------------------------
# Orthogonal matching pursuit
# ---------------------------------------------------------------------------

def omp(ts: TrainingSet, cfg: OmpConfig | None = None) -> InterpolatorResult:
    """Greedy column selection with orthogonal residual updates.

    Each step picks the column most correlated with the current residual
    (lowest index on ties), then projects the residual off the span of the
    selected columns. Coefficients are least squares on the selected set.
    """
    cfg = cfg or OmpConfig.to_completion()
    A, Y = ts.A, ts.Y
    n, d = A.shape
    col_norms = np.linalg.norm(A, axis=0)
    if np.any(col_norms == 0):
        raise ValueError("design has zero columns")
    dtype = np.result_type(A, Y, float)
    Q = np.zeros((n, n), dtype=dtype)
    r = Y.astype(dtype, copy=True)
    selected: list[int] = []
    is_selected = np.zeros(d, dtype=bool)
    max_steps = n
    if cfg.stopping is Stopping.FIXED_STEPS:
        max_steps = min(n, cfg.k0)
    threshold = None
    if cfg.stopping is Stopping.RESIDUAL_THRESHOLD:
        threshold = cfg.sigma * math.sqrt(2.0 * (1.0 + cfg.eta) * math.log(d))

    stop_reason = "max_steps"
    while len(selected) < max_steps:
        r_norm = np.linalg.norm(r)
        if r_norm < cfg.residual_tol:
            stop_reason = "residual"
            break
        corr = np.abs(A.conj().T @ r)
        if threshold is not None and corr.max() <= threshold:
            stop_reason = "threshold"
            break
        corr[is_selected] = -1.0
        j = int(np.argmax(corr))
        t = len(selected)
        q = A[:, j].astype(dtype, copy=True)
        # two passes of Gram-Schmidt keep Q orthonormal to working precision
        for _ in range(2):
            q -= Q[:, :t] @ (Q[:, :t].conj().T @ q)
        q_norm = np.linalg.norm(q)
        if q_norm <= 1e-12 * col_norms[j]:
            raise NumericalBreakdown(f"column {j} lies in the span of the selected set")
        q /= q_norm
        Q[:, t] = q
        r_new = r - q * np.vdot(q, r)
        if np.linalg.norm(r_new) > r_norm * (1 + 1e-10):
            raise NumericalBreakdown("residual grew after projection")
        r = r_new
        selected.append(j)
        is_selected[j] = True

    S = np.array(selected, dtype=int)
    alpha = np.zeros(d, dtype=dtype)
    if S.size:
        coef, *_ = np.linalg.lstsq(A[:, S], Y, rcond=None)
        alpha[S] = coef
    res = InterpolatorResult.build(A, Y, alpha, objective=float(np.linalg.norm(alpha)),
                                   method="omp", selection_order=S.tolist(),
                                   stop_reason=stop_reason, steps=int(S.size))
    return res


# ---------------------------------------------------------------------------
# Basis pursuit
# ---------------------------------------------------------------------------

def solve_bp_lp(A: np.ndarray, Y: np.ndarray, engine: str = "homotopy",
                max_iter: int | None = None, cert_tol: float = 1e-9) -> LpSolution:
    """Solve ``min 1^T (u + v)`` s.t. ``[A, -A] [u; v] = Y``, ``u, v >= 0``.

    Engines, all returning a vertex of the feasible polytope:

    * ``"homotopy"``: Lasso path pivoting (:func:`bp_homotopy`), verified by a
      dual certificate; falls back to HiGHS if the certificate fails.
    * ``"highs"``: HiGHS dual simplex.
    * ``"bland"``: dense two-phase tableau simplex with Bland's rule, for
      small problems.
    """
    A = np.asarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, d = A.shape
    if engine == "homotopy":
        try:
            alpha, S, dual = bp_homotopy(A, Y, max_steps=max_iter)
            certified = (np.abs(A.T @ dual).max(initial=0.0) <= 1 + cert_tol and
                         np.linalg.norm(A @ alpha - Y) <= 1e-8 * max(1.0, np.linalg.norm(Y)))
        except (SimplexCycling, NumericalBreakdown, np.linalg.LinAlgError):
            certified = False
        if certified:
            z = np.concatenate([np.maximum(alpha, 0.0), np.maximum(-alpha, 0.0)])
            return LpSolution(z[:d], z[d:], np.flatnonzero(z), float(z.sum()))
        engine = "highs"
    M = np.hstack([A, -A])
    c = np.ones(2 * d)
    if engine == "highs":
        res = linprog(c, A_eq=M, b_eq=Y, bounds=(0, None), method="highs-ds",
                      options={"primal_feasibility_tolerance": 1e-10,
                               "dual_feasibility_tolerance": 1e-10})
        if res.status == 2:
            raise Infeasible(res.message)
        if res.status != 0:
            raise NumericalBreakdown(f"LP solver failed: {res.message}")
        z = np.maximum(res.x, 0.0)
    elif engine == "bland":
        z = bland_simplex(M, Y, c, max_iter=max_iter)
    else:
        raise ValueError(f"unknown LP engine {engine!r}")
    u, v = z[:d], z[d:]
    tol = 1e-9 * max(1.0, float(np.max(z)) if z.size else 1.0)
    basis = np.flatnonzero(z > tol)
    return LpSolution(u, v, basis, float(z.sum()))


def bland_simplex(M: np.ndarray, b: np.ndarray, c: np.ndarray, max_iter: int | None = None,
                  tol: float = 1e-10) -> np.ndarray:
    """Two-phase tableau simplex for ``min c^T z, M z = b, z >= 0`` with Bland's rule."""
    m, N = M.shape
    M = M.astype(float).copy()
    b = b.astype(float).copy()
    neg = b < 0
    M[neg] *= -1
    b[neg] *= -1
    max_iter = max_iter or 50 * (m + N)

    # tableau rows: constraints, then objective; columns: z, artificials, rhs
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = M
    T[:m, N:N + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(N, N + m))

    def run(cost, allowed):
        T[m, :] = 0.0
        T[m, :len(cost)] = cost
        for i, bv in enumerate(basis):
            if T[m, bv] != 0:
                T[m, :] -= T[m, bv] * T[i, :]
        for _ in range(max_iter):
            reduced = T[m, :allowed]
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                return
            e = int(candidates[0])
            col = T[:m, e]
            pos = np.flatnonzero(col > tol)
            if pos.size == 0:
                raise Infeasible("LP is unbounded")
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol * max(1.0, abs(best))]
            leave = int(min(ties, key=lambda i: basis[i]))
            pivot(leave, e)
        raise SimplexCycling(f"no convergence within {max_iter} pivots")

    def pivot(row, col):
        T[row, :] /= T[row, col]
        for i in range(m + 1):
            if i != row and T[i, col] != 0:
                T[i, :] -= T[i, col] * T[row, :]
        basis[row] = col

    # phase I: minimize the sum of artificials
    run(np.concatenate([np.zeros(N), np.ones(m)]), N + m)
    if -T[m, -1] > 1e-8 * max(1.0, np.abs(b).max()):
        raise Infeasible("equality constraints cannot be met")
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= N:
            nz = np.flatnonzero(np.abs(T[i, :N]) > tol)
            if nz.size == 0:
                raise Infeasible("constraint rows are linearly dependent")
            pivot(i, int(nz[0]))
    T[:, N:N + m] = 0.0
    # phase II
    run(c, N)
    z = np.zeros(N)
    for i, bv in enumerate(basis):
        z[bv] = T[i, -1]
    return np.maximum(z, 0.0)


class _Cholesky:
    """Cholesky factor of ``A_S^T A_S`` with column insertion and deletion."""

    def __init__(self, n_max):
        self.L = np.zeros((n_max, n_max))
        self.size = 0

    def insert(self, cross, diag):
        k = self.size
        if k:
            w = solve_triangular(self.L[:k, :k], cross, lower=True)
        else:
            w = np.zeros(0)
        piv = diag - w @ w
        if piv <= 1e-13 * diag:
            return False
        self.L[k, :k] = w
        self.L[k, k] = math.sqrt(piv)
        self.size = k + 1
        return True

    def delete(self, pos):
        k = self.size
        L = self.L
        # drop row pos, then restore lower-triangular form with Givens rotations
        L[pos:k - 1, :k] = L[pos + 1:k, :k].copy()
        L[k - 1, :k] = 0.0
        for i in range(pos, k - 1):
            a, b = L[i, i], L[i, i + 1]
            h = math.hypot(a, b)
            if h == 0.0:
                continue
            c, s = a / h, b / h
            col_i = L[i:k - 1, i].copy()
            col_j = L[i:k - 1, i + 1].copy()
            L[i:k - 1, i] = c * col_i + s * col_j
            L[i:k - 1, i + 1] = -s * col_i + c * col_j
        L[:, k - 1] = 0.0
        self.size = k - 1

    def solve(self, rhs):
        k = self.size
        z = solve_triangular(self.L[:k, :k], rhs, lower=True)
        return solve_triangular(self.L[:k, :k].T, z, lower=False)


def bp_homotopy(A: np.ndarray, Y: np.ndarray, max_steps: int | None = None):
    """Minimum l1 interpolation by following the Lasso path down to zero penalty.

    The path of ``0.5 |Y - A a|^2 + lam |a|_1`` is piecewise linear in ``lam``;
    each breakpoint adds or removes one coordinate, which is a pivot between
    adjacent vertices. At ``lam -> 0`` the active set is a basis of the
    l1 program. Returns ``(alpha, support, dual)`` where ``dual`` satisfies
    ``A_S^T dual = sign(alpha_S)``; optimality holds iff ``|A^T dual|_inf <= 1``.
    """
    n, d = A.shape
    max_steps = max_steps or 20 * n + 100
    alpha = np.zeros(d)
    c = A.T @ Y
    j = int(np.argmax(np.abs(c)))
    lam = float(abs(c[j]))
    if lam == 0.0:
        return alpha, np.zeros(0, dtype=int), np.zeros(n)
    col_sq = np.einsum("ij,ij->j", A, A)
    chol = _Cholesky(n)
    active: list[int] = []
    in_active = np.zeros(d, dtype=bool)
    # active columns kept contiguous, in insertion order, to avoid gathers
    AS = np.empty((n, n), dtype=A.dtype)

    def add(j):
        k = len(active)
        cross = AS[:, :k].T @ A[:, j] if k else np.zeros(0)
        if not chol.insert(cross, col_sq[j]):
            raise NumericalBreakdown(f"column {j} is numerically dependent on the active set")
        AS[:, k] = A[:, j]
        active.append(j)
        in_active[j] = True

    add(j)
    just_dropped = -1
    steps_taken = 0
    for _ in range(max_steps):
        S = np.array(active, dtype=int)
        signs = np.where(alpha[S] != 0, np.sign(alpha[S]), np.sign(c[S]))
        direction = chol.solve(signs)
        v = A.T @ (AS[:, :len(active)] @ direction)
        # step size until an inactive correlation reaches the shrinking level
        step = lam
        enter = -1
        off = ~in_active
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = (lam - c) / (1.0 - v)
            g2 = (lam + c) / (1.0 + v)
        if just_dropped >= 0:
            # it sits on the boundary it left through; only the other side may re-admit it
            if c[just_dropped] > 0:
                g1[just_dropped] = np.inf
            else:
                g2[just_dropped] = np.inf
        cand = np.where(off & (g1 > 1e-14 * lam), g1, np.inf)
        cand = np.minimum(cand, np.where(off & (g2 > 1e-14 * lam), g2, np.inf))
        if len(active) < n:
            jj = int(np.argmin(cand))
            if cand[jj] < step:
                step, enter = float(cand[jj]), jj
        # step size until an active coefficient crosses zero
        leave = -1
        with np.errstate(divide="ignore", invalid="ignore"):
            g3 = -alpha[S] / direction
        g3 = np.where(g3 > 1e-14 * lam, g3, np.inf)
        if g3.size:
            kk = int(np.argmin(g3))
            if g3[kk] < step:
                step, enter, leave = float(g3[kk]), -1, kk
        alpha[S] += step * direction
        lam -= step
        just_dropped = -1
        if leave >= 0:
            j_out = active[leave]
            alpha[j_out] = 0.0
            chol.delete(leave)
            k = len(active)
            AS[:, leave:k - 1] = AS[:, leave + 1:k].copy()
            active.pop(leave)
            in_active[j_out] = False
            just_dropped = j_out
        steps_taken += 1
        if steps_taken % 64 == 0:
            c = A.T @ (Y - A @ alpha)
        else:
            # correlations move linearly along the segment
            c = c - step * v
        if enter >= 0:
            add(enter)
        if lam <= 1e-14 * abs(c).max(initial=1.0) or (enter < 0 and leave < 0):
            break
    else:
        raise SimplexCycling(f"homotopy did not finish in {max_steps} steps")

    S = np.array(sorted(active), dtype=int)
    # exact vertex: re-solve from the support columns
    coef, *_ = np.linalg.lstsq(A[:, S], Y, rcond=None)
    signs = np.sign(coef)
    keep = signs != 0
    S, coef, signs = S[keep], coef[keep], signs[keep]
    alpha = np.zeros(d)
    alpha[S] = coef
    dual, *_ = np.linalg.lstsq(A[:, S].T, signs, rcond=None)
    return alpha, S, dual


def basis_pursuit(ts: TrainingSet, engine: str = "homotopy", polish: bool = True) -> InterpolatorResult:
    """Minimum l1-norm interpolator, returned at a vertex (support at most n).

    After the LP, the coefficients on the support are re-solved from the
    support columns, which removes the LP solver's feasibility slack without
    moving off the vertex.
    """
    A, Y = ts.A, ts.Y
    if np.iscomplexobj(A) or np.iscomplexobj(Y):
        raise TypeError("basis pursuit is implemented for real designs only")
    n, d = A.shape
    lp = solve_bp_lp(A, Y, engine=engine)
    alpha = lp.alpha
    S = np.flatnonzero(np.abs(alpha) > 1e-9 * max(1.0, np.abs(alpha).max()))
    basic = S.size <= n and (S.size == 0 or np.linalg.matrix_rank(A[:, S]) == S.size)
    if polish and basic and S.size:
        coef, *_ = np.linalg.lstsq(A[:, S], Y, rcond=None)
        if np.all(np.sign(coef) == np.sign(alpha[S])):
            alpha = np.zeros(d)
            alpha[S] = coef
    overlap = int(np.sum((lp.u > 1e-9) & (lp.v > 1e-9)))
    return InterpolatorResult.build(A, Y, alpha, objective=float(np.abs(alpha).sum()),
                                    method="basis_pursuit", lp_objective=lp.objective,
                                    basic=bool(basic), uv_overlap=overlap, engine=engine,
                                    lp=lp)


# ---------------------------------------------------------------------------
# Lasso
# ---------------------------------------------------------------------------

def _soft(x, t):
    return np.sign(x) * max(abs(x) - t, 0.0)


def lasso_objective(A, Y, alpha, lam) -> float:
    n = A.shape[0]
    r = Y - A @ alpha
    return float(r @ r / (2 * n) + lam * np.abs(alpha).sum())


def lasso_kkt_residual(A, Y, alpha, lam) -> float:
    """Largest violation of the Lasso optimality conditions."""
    n = A.shape[0]
    g = A.T @ (Y - A @ alpha) / n
    on = alpha != 0
    viol_on = np.abs(g[on] - lam * np.sign(alpha[on]))
    viol_off = np.maximum(np.abs(g[~on]) - lam, 0.0)
    return float(max(viol_on.max(initial=0.0), viol_off.max(initial=0.0)))


def _sign_pattern_solve(A, Y, S, signs, lam):
    """Exact Lasso solution for a given support and sign pattern, or None."""
    n = A.shape[0]
    AS = A[:, S]
    G = AS.T @ AS / n
    rhs = AS.T @ Y / n - lam * signs
    try:
        coef = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(coef)) or np.any(np.sign(coef) != signs):
        return None
    return coef


def _cd_active(G, c, alpha, lam, max_sweeps, tol, order_rng, check_every=10):
    """Coordinate descent for ``0.5 a^T G a - c^T a + lam |a|_1`` (Gram form).

    Every ``check_every`` sweeps the current sign pattern is solved exactly;
    if that point satisfies the block optimality conditions it is returned.
    """
    m = alpha.size
    idx = np.arange(m)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        biggest = 0.0
        order = idx if order_rng is None else order_rng.permutation(idx)
        for j in order:
            gjj = G[j, j]
            rho = c[j] - G[j] @ alpha + gjj * alpha[j]
            new = _soft(rho, lam) / gjj
            delta = new - alpha[j]
            if delta != 0.0:
                alpha[j] = new
                biggest = max(biggest, abs(delta))
        if biggest <= tol:
            break
        if sweeps % check_every == 0:
            S = np.flatnonzero(alpha)
            if S.size:
                signs = np.sign(alpha[S])
                try:
                    coef = np.linalg.solve(G[np.ix_(S, S)], c[S] - lam * signs)
                except np.linalg.LinAlgError:
                    continue
                if np.all(np.sign(coef) == signs):
                    trial = np.zeros(m)
                    trial[S] = coef
                    g = c - G @ trial
                    off = np.ones(m, dtype=bool)
                    off[S] = False
                    if np.all(np.abs(g[off]) <= lam * (1 + 1e-12)):
                        alpha[:] = trial
                        break
    return sweeps


def lasso_cd(ts: TrainingSet, cfg: LassoConfig, alpha0=None, return_info: bool = False):
    """Minimize ``|Y - A alpha|^2 / (2n) + lambda_n |alpha|_1`` by coordinate descent.

    Works on a growing active set: coordinate descent on the active
    coordinates, then a full gradient check to admit violators. When the sign
    pattern settles the support coefficients are solved exactly. Stops when
    the optimality residual is at most ``kkt_tol``.
    """
    lam = cfg.lambda_n
    if lam is None or lam <= 0:
        raise ValueError("lambda_n must be positive")
    A, Y = ts.A, ts.Y
    if np.iscomplexobj(A) or np.iscomplexobj(Y):
        raise TypeError("lasso is implemented for real designs only")
    n, d = A.shape
    col_sq = np.einsum("ij,ij->j", A, A) / n
    if np.any(col_sq == 0):
        raise ValueError("design has zero columns")
    alpha = np.zeros(d) if alpha0 is None else np.array(alpha0, dtype=float)
    order_rng = np.random.default_rng(cfg.seed) if cfg.random_order else None

    batch = max(10, n // 10)

    def top_violators(grad, exclude):
        excess = np.abs(grad) - lam - 0.5 * cfg.kkt_tol
        excess[list(exclude)] = -1.0
        cand = np.flatnonzero(excess > 0)
        cand = cand[np.argsort(-excess[cand], kind="stable")]
        return set(cand[:batch].tolist())

    active = set(np.flatnonzero(alpha).tolist())
    active |= top_violators(A.T @ (Y - A @ alpha) / n, active)

    best_alpha, best_kkt = alpha.copy(), math.inf
    iters = 0
    converged = False
    stalls = 0
    for _ in range(cfg.max_iter):
        idx = np.array(sorted(active), dtype=int)
        if idx.size:
            AS = A[:, idx]
            G = AS.T @ AS / n
            c = AS.T @ Y / n  # alpha is zero off idx
            sub = alpha[idx].copy()
            iters += _cd_active(G, c, sub, lam,
                                max_sweeps=max(100, cfg.max_iter),
                                tol=1e-15 * max(1.0, np.abs(sub).max(initial=0.0)),
                                order_rng=order_rng)
            alpha[:] = 0.0
            alpha[idx] = sub
            S = np.flatnonzero(alpha)
            if S.size and S.size <= n:
                exact = _sign_pattern_solve(A, Y, S, np.sign(alpha[S]), lam)
                if exact is not None:
                    alpha[:] = 0.0
                    alpha[S] = exact
        kkt = lasso_kkt_residual(A, Y, alpha, lam)
        if kkt < best_kkt:
            best_alpha, best_kkt = alpha.copy(), kkt
        if kkt <= cfg.kkt_tol:
            converged = True
            break
        new = top_violators(A.T @ (Y - A @ alpha) / n, active)
        if not new:
            stalls += 1
            if stalls > 20:
                break
        active |= new

    alpha = best_alpha
    info = {"converged": converged, "kkt": best_kkt, "iterations": iters,
            "objective": lasso_objective(A, Y, alpha, lam)}
    if not converged:
        warnings.warn(MaxIterExceeded(f"lasso stopped with KKT residual {best_kkt:.2e}"),
                      stacklevel=2)
    return (alpha, info) if return_info else alpha


def sqrt_lasso_kkt_residual(A, Y, alpha, gamma) -> float:
    """Optimality residual of ``|Y - A alpha| / sqrt(n) + gamma |alpha|_1``, in Lasso units."""
    n = A.shape[0]
    sigma_hat = np.linalg.norm(Y - A @ alpha) / math.sqrt(n)
    return lasso_kkt_residual(A, Y, alpha, gamma * sigma_hat)


def sqrt_lasso_objective(A, Y, alpha, gamma) -> float:
    n = A.shape[0]
    return float(np.linalg.norm(Y - A @ alpha) / math.sqrt(n) + gamma * np.abs(alpha).sum())


def sqrt_lasso(ts: TrainingSet, cfg: LassoConfig, return_info: bool = False):
    """Minimize ``|Y - A alpha| / sqrt(n) + gamma_n |alpha|_1``.

    Alternates the noise-level estimate ``sigma_hat = |Y - A alpha| / sqrt(n)``
    with a Lasso solve at ``lambda = gamma_n sigma_hat``. A few plain
    alternations are followed, if needed, by Brent's method on the same
    fixed-point equation. The final sign pattern is then solved exactly for
    the joint optimum. If the residual collapses the problem degenerates to
    basis pursuit, which is returned with a flag.
    """
    gamma = cfg.gamma_n
    if gamma is None or gamma <= 0:
        raise ValueError("gamma_n must be positive")
    A, Y = ts.A, ts.Y
    n, d = A.shape
    y_scale = np.linalg.norm(Y) / math.sqrt(n)
    if y_scale == 0:
        info = {"converged": True, "kkt": 0.0, "sigma_hat": 0.0, "fallback_bp": False}
        return (np.zeros(d), info) if return_info else np.zeros(d)

    def degenerate():
        warnings.warn(DegenerateResidual("residual vanished; using basis pursuit"), stacklevel=3)
        res = basis_pursuit(ts)
        info = {"converged": True, "kkt": 0.0, "sigma_hat": 0.0, "fallback_bp": True}
        return (res.alpha_hat, info) if return_info else res.alpha_hat

    if d >= n and np.isrealobj(A) and np.isrealobj(Y):
        # the optimum interpolates iff some basis-pursuit dual vector is short enough
        try:
            a_bp, _, dual = bp_homotopy(A, Y)
            if (np.abs(A.T @ dual).max(initial=0.0) <= 1 + 1e-9 and
                    gamma * math.sqrt(n) * np.linalg.norm(dual) <= 1.0):
                return degenerate()
        except (SimplexCycling, NumericalBreakdown, np.linalg.LinAlgError):
            pass

    inner = LassoConfig(max_iter=cfg.max_iter, kkt_tol=0.1 * cfg.kkt_tol,
                        random_order=cfg.random_order, seed=cfg.seed)
    state = {"alpha": np.zeros(d), "evals": 0}

    def refit(sigma):
        """Lasso at ``lambda = gamma sigma``; returns the implied noise level."""
        cfg_s = LassoConfig(gamma * sigma, None, inner.max_iter, inner.kkt_tol,
                            inner.random_order, inner.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxIterExceeded)
            state["alpha"] = lasso_cd(ts, cfg_s, alpha0=state["alpha"])
        state["evals"] += 1
        return np.linalg.norm(Y - A @ state["alpha"]) / math.sqrt(n)

    # a few plain fixed-point steps; from sigma = |Y|/sqrt(n) they decrease monotonically
    sigma_hat = y_scale
    converged = False
    for _ in range(8):
        new_sigma = refit(sigma_hat)
        if new_sigma <= 1e-12 * y_scale:
            return degenerate()
        change = abs(new_sigma - sigma_hat)
        sigma_hat = new_sigma
        if change <= 1e-13 * y_scale:
            converged = True
            break
    if not converged:
        # bracket the fixed point and finish with Brent's method
        hi = sigma_hat
        lo = 0.5 * hi
        while refit(lo) <= lo:
            lo *= 0.5
            if lo <= 1e-12 * y_scale:
                return degenerate()
        sigma_hat = brentq(lambda s_: refit(s_) - s_, lo, hi, xtol=1e-14 * y_scale,
                           rtol=1e-15, maxiter=200)
        refit(sigma_hat)
        converged = True
    alpha = state["alpha"]
    outer_it = state["evals"]

    # exact joint fixed point on the final sign pattern
    S = np.flatnonzero(alpha)
    if S.size and S.size <= n:
        signs = np.sign(alpha[S])
        AS = A[:, S]
        G = AS.T @ AS / n
        c = AS.T @ Y / n
        try:
            G_inv_c = np.linalg.solve(G, c)
            G_inv_s = np.linalg.solve(G, signs)

            def gap(s):
                coef = G_inv_c - gamma * s * G_inv_s
                return np.linalg.norm(Y - AS @ coef) / math.sqrt(n) - s

            lo, hi = 0.5 * sigma_hat, 2.0 * sigma_hat
            if gap(lo) * gap(hi) < 0:
                s_star = brentq(gap, lo, hi, xtol=1e-15 * y_scale, rtol=1e-15, maxiter=200)
                coef = G_inv_c - gamma * s_star * G_inv_s
                cand = np.zeros(d)
                cand[S] = coef
                if (np.all(np.sign(coef) == signs) and
                        sqrt_lasso_kkt_residual(A, Y, cand, gamma)
                        <= sqrt_lasso_kkt_residual(A, Y, alpha, gamma)):
                    alpha = cand
        except np.linalg.LinAlgError:
            pass

    kkt = sqrt_lasso_kkt_residual(A, Y, alpha, gamma)
    sigma_hat = float(np.linalg.norm(Y - A @ alpha) / math.sqrt(n))
    if kkt > cfg.kkt_tol:
        warnings.warn(MaxIterExceeded(f"sqrt-lasso stopped with KKT residual {kkt:.2e}"),
                      stacklevel=2)
    info = {"converged": converged and kkt <= cfg.kkt_tol, "kkt": kkt, "sigma_hat": sigma_hat,
            "fallback_bp": False, "outer_iterations": outer_it,
            "objective": sqrt_lasso_objective(A, Y, alpha, gamma)}
    return (alpha, info) if return_info else alpha


# ---------------------------------------------------------------------------
# Hybrid interpolation
# ---------------------------------------------------------------------------

def hybrid_interpolate(ts: TrainingSet, first_stage, inst: SparseLinearInstance | None = None,
                       rtol: float = DEFAULT_RANK_RTOL) -> InterpolatorResult:
    """First-stage estimate plus the minimum-norm interpolator of its residual.

    ``first_stage`` maps a :class:`TrainingSet` to a coefficient vector (or an
    :class:`InterpolatorResult`). With ``inst`` supplied the diagnostics also
    carry the first-stage estimation and prediction errors.
    """
    a1 = first_stage(ts)
    if isinstance(a1, InterpolatorResult):
        a1 = a1.alpha_hat
    a1 = np.asarray(a1)
    resid = ts.Y - ts.A @ a1
    delta = min_norm_solve(ts.A, resid, rtol=rtol)
    alpha = a1 + delta
    diag = {
        "method": "hybrid",
        "first_stage": a1,
        "delta_norm2": float(np.real(np.vdot(delta, delta))),
        "first_stage_residual_norm2": float(np.real(np.vdot(resid, resid))),
    }
    if inst is not None:
        e_est, e_pred = estimation_and_prediction_error(a1, inst, ts.A)
        diag["first_stage_est_error"] = e_est
        diag["first_stage_pred_error"] = e_pred
    return InterpolatorResult.build(ts.A, ts.Y, alpha, **diag)


def hybrid_error_bound(ts: TrainingSet, e_est: float, e_pred: float) -> float:
    """``E_est + (2 |W|^2 + 2 n E_pred) / lambda_min(A A^T)``."""
    s = np.linalg.svd(ts.A, compute_uv=False)
    lam_min = s[-1] ** 2
    w2 = float(np.real(np.vdot(ts.W, ts.W)))
    return e_est + (2 * w2 + 2 * ts.n * e_pred) / lam_min


# ---------------------------------------------------------------------------
# Design diagnostics
# ---------------------------------------------------------------------------

def incoherence(A) -> float:
    return pairwise_incoherence(A)


def restricted_eigenvalue_estimate(A, support, rng: Rng | None = None, n_samples: int = 2000,
                                   cone: float = 3.0) -> float:
    """Smallest ``|A v|^2 / (n |v|^2)`` over random ``v`` in the cone
    ``|v_off|_1 <= cone |v_on|_1``.

    Sampling only ever finds directions at least as good as the worst, so the
    value is an optimistic estimate of the restricted eigenvalue.
    """
    A = np.asarray(A)
    rng = as_rng(rng)
    n, d = A.shape
    support = np.asarray(support, dtype=int)
    off = np.setdiff1d(np.arange(d), support)
    best = math.inf
    for _ in range(n_samples):
        v = np.zeros(d)
        v[support] = rng.gen.standard_normal(support.size)
        if off.size:
            m = int(rng.gen.integers(1, min(off.size, 3 * max(1, support.size)) + 1))
            pick = rng.gen.choice(off, size=m, replace=False)
            direction = rng.gen.standard_normal(m)
            budget = rng.gen.uniform(0, cone) * np.abs(v[support]).sum()
            v[pick] = direction / np.abs(direction).sum() * budget
        nv = v @ v
        if nv == 0:
            continue
        Av = A @ v
        best = min(best, float(Av @ Av / (n * nv)))
    return best
