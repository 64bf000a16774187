"""Dense interpolators: minimum l2, weighted minimum l2 and ridge.

The oracle interpolator, which needs the true signal and the realized noise,
lives in :mod:`interp.interpolators.oracle` so it cannot be picked up by
accident as an ordinary estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core_model import (
    DEFAULT_RANK_RTOL,
    DimensionMismatch,
    InterpError,
    TrainingSet,
    covariance_roots,
    min_norm_solve,
)

SUPPORT_RTOL = 1e-8


class NonPositiveWeight(InterpError):
    pass


@dataclass(frozen=True)
class WeightScheme:
    """Positive per-feature weights; larger weight means a weaker penalty."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1:
            raise DimensionMismatch("weights must be a vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise NonPositiveWeight("weights must be positive and finite")
        object.__setattr__(self, "w", w)

    @classmethod
    def uniform(cls, d: int) -> "WeightScheme":
        return cls(np.ones(d))


@dataclass
class InterpolatorResult:
    alpha_hat: np.ndarray
    residual_norm: float
    support: np.ndarray
    objective: float
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def build(cls, A, Y, alpha, objective=None, support_tol=None, **diagnostics):
        alpha = np.asarray(alpha)
        resid = float(np.linalg.norm(A @ alpha - Y))
        supp = support_of(alpha, support_tol)
        if objective is None:
            objective = float(np.linalg.norm(alpha))
        return cls(alpha, resid, supp, float(objective), dict(diagnostics))


def support_of(alpha, tol=None) -> np.ndarray:
    """Indices with ``|alpha_j| > tol``; default tol is 1e-8 times the max entry."""
    mag = np.abs(np.asarray(alpha))
    if mag.size == 0:
        return np.zeros(0, dtype=int)
    if tol is None:
        tol = SUPPORT_RTOL * mag.max()
    return np.flatnonzero(mag > tol)


def least_squares(ts: TrainingSet) -> InterpolatorResult:
    """Unique least-squares fit, used to the left of the interpolation threshold."""
    alpha, *_ = np.linalg.lstsq(ts.A, ts.Y, rcond=None)
    return InterpolatorResult.build(ts.A, ts.Y, alpha, method="least_squares")


def min_l2_interpolate(ts: TrainingSet, rtol: float = DEFAULT_RANK_RTOL) -> InterpolatorResult:
    alpha = min_norm_solve(ts.A, ts.Y, rtol=rtol)
    return InterpolatorResult.build(ts.A, ts.Y, alpha, method="min_l2")


def weighted_min_l2_interpolate(ts: TrainingSet, w: WeightScheme,
                                rtol: float = DEFAULT_RANK_RTOL) -> InterpolatorResult:
    """Minimize ``sum |alpha_k|^2 / w_k^2`` subject to ``A alpha = Y``.

    Substituting ``alpha = diag(w) beta`` turns this into a plain minimum-norm
    problem for ``A diag(w)``.
    """
    if not isinstance(w, WeightScheme):
        w = WeightScheme(w)
    if w.w.shape[0] != ts.d:
        raise DimensionMismatch(f"{w.w.shape[0]} weights for {ts.d} features")
    beta = min_norm_solve(ts.A * w.w, ts.Y, rtol=rtol)
    alpha = w.w * beta
    return InterpolatorResult.build(ts.A, ts.Y, alpha, objective=float(np.linalg.norm(beta)),
                                    method="weighted_min_l2")


def ridge_solve(ts: TrainingSet, lambda2: float, Gamma=None) -> np.ndarray:
    """Minimizer of ``|A alpha - Y|^2 + lambda2 alpha^T Gamma alpha`` via normal equations."""
    if lambda2 <= 0:
        raise ValueError("lambda2 must be positive")
    A = ts.A
    G = np.eye(ts.d) if Gamma is None else np.asarray(Gamma)
    lhs = A.conj().T @ A + lambda2 * G
    rhs = A.conj().T @ ts.Y
    # lhs is Hermitian positive definite
    return np.linalg.solve(lhs, rhs)


def ridge_as_augmented_interpolation(ts: TrainingSet, lambda2: float, Gamma=None) -> np.ndarray:
    """Ridge computed as minimum-norm interpolation with ``n`` extra ridge features.

    The augmented design ``[A Gamma^{-1/2}, lambda I]`` always has full row
    rank; its minimum-norm interpolator restricted to the first ``d``
    coordinates and mapped back through ``Gamma^{-1/2}`` is the ridge solution.
    """
    if lambda2 <= 0:
        raise ValueError("lambda2 must be positive")
    n, d = ts.n, ts.d
    if Gamma is None:
        g_inv_half = np.eye(d)
    else:
        g_inv_half, _ = covariance_roots(Gamma)
    aug = np.hstack([ts.A @ g_inv_half, np.sqrt(lambda2) * np.eye(n)])
    z = min_norm_solve(aug, ts.Y)
    return g_inv_half @ z[:d]


__all__ = [
    "InterpolatorResult",
    "NonPositiveWeight",
    "WeightScheme",
    "least_squares",
    "min_l2_interpolate",
    "ridge_as_augmented_interpolation",
    "ridge_solve",
    "support_of",
    "weighted_min_l2_interpolate",
]
