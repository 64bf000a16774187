"""Reference curves for the cost of fitting noise.

All functions return the excess test MSE, i.e. without the irreducible
``sigma2`` of a fresh test observation. Universal constants that the theory
leaves unspecified default to 1 and are exposed on :class:`BoundParams`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core_model import InterpError


class ZeroColumn(InterpError):
    pass


class VacuousBound(UserWarning):
    """The requested bound is infinite or outside its meaningful regime."""


class WeakRegime(UserWarning):
    """``d <= e n``: the logarithmic floor is reported but is not informative."""


@dataclass(frozen=True)
class BoundParams:
    n: int
    d: int
    sigma2: float = 1.0
    delta: float = 0.5
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    def const(self, name: str) -> float:
        return float(self.constants.get(name, 1.0))


@dataclass(frozen=True)
class BoundValue:
    """A bound value with a flag set when the bound is vacuous or weak."""

    value: float
    flagged: bool = False

    def __float__(self):
        return self.value


def ideal_mse_lower_gaussian(p: BoundParams) -> float:
    """``n sigma2 (1 - delta) / (sqrt d + 2 sqrt n)^2``."""
    return p.n * p.sigma2 * (1 - p.delta) / (math.sqrt(p.d) + 2 * math.sqrt(p.n)) ** 2


def ideal_mse_upper_gaussian(p: BoundParams, with_flag: bool = False):
    """``n sigma2 (1 + delta) / (sqrt d - 2 sqrt n)^2``, infinite when ``d <= 4n``."""
    gap = math.sqrt(p.d) - 2 * math.sqrt(p.n)
    if gap <= 0:
        warnings.warn(VacuousBound(f"upper bound vacuous for d={p.d} <= 4n={4 * p.n}"),
                      stacklevel=2)
        val = BoundValue(math.inf, True)
    else:
        val = BoundValue(p.n * p.sigma2 * (1 + p.delta) / gap ** 2)
    return val if with_flag else val.value


def parsimonious_floor(p: BoundParams, beta: float = 1.0, with_flag: bool = False):
    """``beta sigma2 (1 - delta) / (4 ln(d/n))`` for beta-parsimonious interpolators."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if p.d <= p.n:
        raise ValueError("the floor needs d > n")
    weak = p.d <= math.e * p.n
    if weak:
        warnings.warn(WeakRegime(f"d={p.d} <= e*n; floor is in its weak regime"), stacklevel=2)
    val = BoundValue(beta * p.sigma2 * (1 - p.delta) / (4 * math.log(p.d / p.n)), weak)
    return val if with_flag else val.value


def singular_value_band_gaussian(n: int, d: int, t: float):
    """Band ``(sqrt d - sqrt n - t, sqrt d + sqrt n + t)`` for the singular values of
    an ``n x d`` standard Gaussian matrix. Returns ``(lo, hi, fail_prob)``
    with ``fail_prob = exp(-t^2/2)``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    lo = math.sqrt(d) - math.sqrt(n) - t
    hi = math.sqrt(d) + math.sqrt(n) + t
    return lo, hi, math.exp(-t * t / 2)


def equiangular_coherence(n: int, d: int) -> float:
    """Pairwise coherence ``sqrt((d - n) / (n (d - 1)))`` of a tight equiangular frame."""
    return math.sqrt((d - n) / (n * (d - 1)))


def equiangular_frame_bound(n: int, d: int, with_flag: bool = False):
    """Smallest-eigenvalue bound ``n (1 - mu_etf)`` used for OMP noise fitting.

    At ``d = n`` the frame is an orthonormal basis; ``n`` is returned and flagged.
    """
    if n < 2 or d < n:
        raise ValueError("need d >= n >= 2")
    if d == n:
        val = BoundValue(float(n), True)
    else:
        val = BoundValue(n * (1 - equiangular_coherence(n, d)))
    return val if with_flag else val.value


def pairwise_incoherence(A) -> float:
    """Largest absolute cosine between two distinct columns of ``A``."""
    A = np.asarray(A)
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ZeroColumn(f"columns {np.flatnonzero(norms == 0).tolist()} are zero")
    if A.shape[1] < 2:
        return 0.0
    U = A / norms
    G = np.abs(U.conj().T @ U)
    np.fill_diagonal(G, 0.0)
    return float(G.max())


# ---------------------------------------------------------------------------
# Other design classes (curves only, constants are user knobs)
# ---------------------------------------------------------------------------

def ideal_mse_lower_subgaussian(p: BoundParams) -> float:
    """``n (1 - delta) sigma2 / (C_K sqrt d + sqrt n)^2``."""
    ck = p.const("C_K")
    return p.n * (1 - p.delta) * p.sigma2 / (ck * math.sqrt(p.d) + math.sqrt(p.n)) ** 2


def ideal_mse_upper_subgaussian(p: BoundParams) -> float:
    """``4 C_K^2 n (1 + delta) sigma2 / (sqrt d - sqrt(n - 1))^2``."""
    ck = p.const("C_K")
    gap = math.sqrt(p.d) - math.sqrt(p.n - 1)
    if gap <= 0:
        return math.inf
    return 4 * ck ** 2 * p.n * (1 + p.delta) * p.sigma2 / gap ** 2


def ideal_mse_lower_heavy_tailed(p: BoundParams) -> float:
    """``n (1 - delta) sigma2 / (C sqrt(d ln n) + sqrt n)^2``."""
    c = p.const("C")
    return p.n * (1 - p.delta) * p.sigma2 / (
        c * math.sqrt(p.d * math.log(p.n)) + math.sqrt(p.n)) ** 2


def bound_table(n: int, d: int, sigma2: float = 1.0, delta: float = 0.5) -> dict:
    """All Gaussian reference values at one ``(n, d)`` point."""
    p = BoundParams(n, d, sigma2, delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        upper = ideal_mse_upper_gaussian(p, with_flag=True)
        out = {
            "ideal_lower": ideal_mse_lower_gaussian(p),
            "ideal_upper": upper.value,
            "upper_vacuous": upper.flagged,
        }
        if d > n:
            floor = parsimonious_floor(p, with_flag=True)
            out["parsimonious_floor"] = floor.value
            out["floor_weak_regime"] = floor.flagged
        else:
            out["parsimonious_floor"] = math.nan
            out["floor_weak_regime"] = True
    return out
