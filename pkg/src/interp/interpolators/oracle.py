"""Oracle interpolator with access to the true signal and realized noise."""

from __future__ import annotations

import numpy as np

from ..core_model import (
    DEFAULT_RANK_RTOL,
    SparseLinearInstance,
    TrainingSet,
    WhitenedView,
    min_norm_solve,
)
from . import InterpolatorResult


def ideal_interpolate(ts: TrainingSet, wv: WhitenedView, inst: SparseLinearInstance,
                      rtol: float = DEFAULT_RANK_RTOL):
    """Interpolator with the smallest possible test MSE.

    Every interpolator can be written ``alpha_star + e`` with ``A e = W``. The
    test MSE is ``|Sigma^{1/2} e|^2``, and in whitened coordinates
    ``u = Sigma^{1/2} e`` the constraint reads ``B u = W``. The best choice is
    the minimum-norm ``u = B^T (B B^T)^{-1} W``, with cost ``W^T (B B^T)^{-1} W``.

    Returns ``(result, ideal_mse)``.
    """
    u = min_norm_solve(wv.B, ts.W, rtol=rtol)
    alpha = inst.alpha_star + wv.sigma_sqrt_inv @ u
    ideal_mse = float(np.real(np.vdot(u, u)))
    res = InterpolatorResult.build(ts.A, ts.Y, alpha, objective=ideal_mse, method="ideal")
    return res, ideal_mse


def ideal_noise_fit(B: np.ndarray, W: np.ndarray) -> float:
    """``W^T (B B^T)^{-1} W`` computed by the same SVD kernel."""
    u = min_norm_solve(B, W)
    return float(np.real(np.vdot(u, u)))
