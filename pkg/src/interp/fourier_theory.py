"""Closed forms for weighted minimum-norm interpolation of Fourier features
on regularly spaced samples.

With ``x_j = j/n`` and ``d = (M+1) n`` the frequencies ``k*`` and
``k* + l n`` take identical values on the training points. Fitting the pure
tone ``Y = f_{k*}(x)`` therefore spreads the unit coefficient across the
alias cohort in proportion to the squared weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_model import TrainingSet, min_norm_solve
from .features import NotMultiple, alias_index_set, fourier_features
from .interpolators import WeightScheme


def _weights(w, d):
    if isinstance(w, WeightScheme):
        w = w.w
    w = np.asarray(w, dtype=float)
    if w.shape != (d,):
        raise ValueError(f"expected {d} weights, got shape {w.shape}")
    return w


@dataclass(frozen=True)
class AliasCohort:
    k_star: int
    indices: np.ndarray
    weights_restricted: np.ndarray
    V: float

    @classmethod
    def of(cls, k_star: int, n: int, d: int, w) -> "AliasCohort":
        w = _weights(w, d)
        idx = np.concatenate([[k_star], alias_index_set(k_star, n, d)]).astype(int)
        wr = w[idx]
        V = float(np.sum(wr ** 2))
        if not V > 0:
            raise ValueError("cohort weight mass must be positive")
        return cls(int(k_star), idx, wr, V)

    @property
    def aliases(self) -> np.ndarray:
        return self.indices[1:]


@dataclass(frozen=True)
class FilterProfile:
    survival: np.ndarray
    contamination: np.ndarray

    @classmethod
    def of(cls, n: int, d: int, w) -> "FilterProfile":
        su = np.array([survival(k, n, d, w) for k in range(n)])
        c = np.array([contamination(k, n, d, w) for k in range(n)])
        return cls(su, c)


def closed_form_weighted_solution(k_star: int, n: int, d: int, w) -> np.ndarray:
    """Coefficients ``w_j^2 / V`` on the alias cohort of ``k*``, zero elsewhere."""
    cohort = AliasCohort.of(k_star, n, d, w)
    alpha = np.zeros(d)
    alpha[cohort.indices] = cohort.weights_restricted ** 2 / cohort.V
    return alpha


def survival(k_star: int, n: int, d: int, w, check: bool = True) -> float:
    """Fraction of the true coefficient kept at frequency ``k*``."""
    cohort = AliasCohort.of(k_star, n, d, w)
    w2 = cohort.weights_restricted ** 2
    su = w2[0] / np.sum(w2)
    if check:
        one_pole = survival_one_pole(k_star, n, d, w)
        if abs(su - one_pole) > 1e-12:
            raise ArithmeticError(f"survival forms disagree: {su!r} vs {one_pole!r}")
    return float(su)


def survival_one_pole(k_star: int, n: int, d: int, w) -> float:
    """``1 / (1 + sum_l w_{k*+ln}^2 / w_{k*}^2)``."""
    cohort = AliasCohort.of(k_star, n, d, w)
    wr = cohort.weights_restricted
    ratio = np.sum(wr[1:] ** 2) / wr[0] ** 2
    return float(1.0 / (1.0 + ratio))


def contamination(k_star: int, n: int, d: int, w) -> float:
    """Standard deviation of the spurious alias prediction: ``sqrt(sum_aliases w^2) / V``."""
    cohort = AliasCohort.of(k_star, n, d, w)
    return float(np.sqrt(np.sum(cohort.weights_restricted[1:] ** 2)) / cohort.V)


def contamination_exact(k_star: int, n: int, d: int, w) -> float:
    """Norm of the alias coefficients ``w_j^2 / V`` themselves: ``sqrt(sum w^4) / V``.

    Agrees with :func:`contamination` when the alias weights are all equal
    (in particular for uniform weights) and is the quantity that enters the
    test MSE ``(1 - SU)^2 + C^2`` of the noiseless fit in general.
    """
    cohort = AliasCohort.of(k_star, n, d, w)
    return float(np.sqrt(np.sum(cohort.weights_restricted[1:] ** 4)) / cohort.V)


def spiked_weights(d: int, s: int, gamma: float) -> np.ndarray:
    """Put a ``gamma`` share of the total squared weight ``d`` on the first ``s`` features."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if not 0 < s < d:
        raise ValueError("need 0 < s < d")
    w = np.full(d, np.sqrt((1 - gamma) * d / (d - s)))
    w[:s] = np.sqrt(gamma * d / s)
    return w


def spiked_survival_approx(n: int, s: int, gamma: float) -> float:
    """Large-``d`` survival for favored frequencies ``k* < s <= n``."""
    return 1.0 / (1.0 + (s / n) * (1.0 / gamma - 1.0))


def empirical_survival_contamination(ts: TrainingSet, alpha_hat, k_star: int,
                                     alpha_star_k: complex = 1.0):
    """Survival and contamination read off a fitted coefficient vector.

    Valid for orthonormal features, where every coefficient off ``k*``
    contributes independently to the prediction error.
    """
    alpha_hat = np.asarray(alpha_hat)
    su = abs(alpha_hat[k_star] / alpha_star_k)
    rest = np.delete(alpha_hat, k_star)
    c = float(np.sqrt(np.sum(np.abs(rest) ** 2)))
    return float(su), c


def interpolation_kernel(w, n: int, d: int, grid) -> np.ndarray:
    """Prediction function from weighted min-norm fitting of the unit impulse.

    Training points are ``j / n``; the output vector is ``e_0``. Because the
    Fourier system on regular points decouples by alias cohort, the fitted
    coefficients are ``w_j^2 / (n V_{j mod n})`` times ``conj(f_j(0)) = 1``.
    """
    if d % n != 0:
        raise NotMultiple(f"n={n} does not divide d={d}")
    w = _weights(w, d)
    w2 = w ** 2
    V = w2.reshape(-1, n).sum(axis=0)  # V[k] for cohort of k
    alpha = w2 / (n * np.tile(V, d // n))
    F = fourier_features(np.asarray(grid, dtype=float), d)
    return F @ alpha


def interpolation_kernel_dense(w, n: int, d: int, grid) -> np.ndarray:
    """Same kernel computed with the generic dense weighted solve."""
    w = _weights(w, d)
    x = np.arange(n) / n
    A = fourier_features(x, d)
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    alpha = w * min_norm_solve(A * w, e0)
    return fourier_features(np.asarray(grid, dtype=float), d) @ alpha
