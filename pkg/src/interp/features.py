"""Feature families and sampling schemes.

Families: i.i.d. Gaussian, Gaussian with a given covariance, Gaussian with a
shared nonzero mean, complex Fourier, Vandermonde (monomials) and orthonormal
Legendre polynomials. Fourier covariates live on [0, 1), polynomial ones on
[-1, 1].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core_model import (
    EIGEN_FLOOR,
    InterpError,
    Rng,
    WhitenedView,
    as_rng,
)


class InvalidDomain(InterpError):
    pass


class NotMultiple(InterpError):
    pass


class Kind(enum.Enum):
    GAUSSIAN_IID = "gaussian"
    GAUSSIAN_COV = "gaussian_cov"
    GAUSSIAN_SHIFTED_MEAN = "gaussian_shifted"
    FOURIER = "fourier"
    VANDERMONDE = "vandermonde"
    LEGENDRE = "legendre"


class Spacing(enum.Enum):
    REGULAR = "regular"
    RANDOM = "random"


_COVARIATE_KINDS = {Kind.FOURIER, Kind.VANDERMONDE, Kind.LEGENDRE}


@dataclass(frozen=True)
class FeatureFamily:
    kind: Kind
    d: int
    cov: np.ndarray | None = None      # GaussianCov
    mean: float = 1.0                  # GaussianShiftedMean
    var: float = 0.01                  # GaussianShiftedMean

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be positive")
        if self.kind is Kind.GAUSSIAN_COV:
            if self.cov is None or self.cov.shape != (self.d, self.d):
                raise ValueError("GaussianCov needs a d x d covariance")
            if not np.allclose(self.cov, self.cov.T):
                raise ValueError("covariance must be symmetric")
            if np.linalg.eigvalsh(self.cov)[0] <= 0:
                raise ValueError("covariance must be positive definite")
        if self.kind is Kind.GAUSSIAN_SHIFTED_MEAN and self.var <= 0:
            raise ValueError("feature variance must be positive")

    # convenience constructors
    @classmethod
    def gaussian(cls, d):
        return cls(Kind.GAUSSIAN_IID, d)

    @classmethod
    def gaussian_cov(cls, cov):
        cov = np.asarray(cov, dtype=float)
        return cls(Kind.GAUSSIAN_COV, cov.shape[0], cov=cov)

    @classmethod
    def shifted_mean(cls, d, mean=1.0, var=0.01):
        return cls(Kind.GAUSSIAN_SHIFTED_MEAN, d, mean=mean, var=var)

    @classmethod
    def fourier(cls, d):
        return cls(Kind.FOURIER, d)

    @classmethod
    def vandermonde(cls, d):
        return cls(Kind.VANDERMONDE, d)

    @classmethod
    def legendre(cls, d):
        return cls(Kind.LEGENDRE, d)

    @property
    def is_complex(self) -> bool:
        return self.kind is Kind.FOURIER

    @property
    def domain(self):
        if self.kind is Kind.FOURIER:
            return (0.0, 1.0)
        if self.kind in (Kind.VANDERMONDE, Kind.LEGENDRE):
            return (-1.0, 1.0)
        return None

    def covariance(self) -> np.ndarray:
        """Second-moment matrix ``E[a(X) a(X)^H]`` of the feature vector."""
        d = self.d
        if self.kind in (Kind.GAUSSIAN_IID, Kind.FOURIER, Kind.LEGENDRE):
            return np.eye(d)
        if self.kind is Kind.GAUSSIAN_COV:
            return np.array(self.cov, dtype=float)
        if self.kind is Kind.GAUSSIAN_SHIFTED_MEAN:
            return self.var * np.eye(d) + self.mean ** 2 * np.ones((d, d))
        return monomial_moment_matrix(d)

    def whitened(self, A: np.ndarray, floor: float = EIGEN_FLOOR) -> WhitenedView:
        if self.kind in (Kind.GAUSSIAN_IID, Kind.FOURIER, Kind.LEGENDRE):
            return WhitenedView.identity(A)
        return WhitenedView.from_covariance(A, self.covariance(), floor)


@dataclass(frozen=True)
class SamplingScheme:
    """Regularly spaced or i.i.d. uniform covariates.

    Gaussian families ignore the scheme (features are drawn directly).
    """

    spacing: Spacing = Spacing.RANDOM
    domain: tuple | None = None

    @classmethod
    def regular(cls, domain=None):
        return cls(Spacing.REGULAR, domain)

    @classmethod
    def uniform(cls, domain=None):
        return cls(Spacing.RANDOM, domain)

    def points(self, n: int, family: FeatureFamily, rng: Rng | None = None) -> np.ndarray:
        dom = family.domain
        if dom is None:
            raise InvalidDomain(f"{family.kind.value} features have no covariate domain")
        if self.domain is not None and tuple(self.domain) != dom:
            raise InvalidDomain(f"scheme domain {self.domain} does not match {dom}")
        lo, hi = dom
        if self.spacing is Spacing.REGULAR:
            return lo + (hi - lo) * np.arange(n) / n
        rng = as_rng(rng)
        return rng.gen.uniform(lo, hi, size=n)


# ---------------------------------------------------------------------------
# Feature maps
# ---------------------------------------------------------------------------

def fourier_features(x: np.ndarray, d: int) -> np.ndarray:
    """Rows ``exp(2 pi i k x_j)`` for ``k = 0..d-1``."""
    x = np.asarray(x, dtype=float)
    # reduce k x mod 1 in exact integer-friendly form to keep aliases exact
    phase = np.mod(np.outer(x, np.arange(d)), 1.0)
    return np.exp(2j * np.pi * phase)


def vandermonde_features(x: np.ndarray, d: int) -> np.ndarray:
    return np.vander(np.asarray(x, dtype=float), d, increasing=True)


def legendre_features(x: np.ndarray, d: int) -> np.ndarray:
    """Legendre polynomials orthonormal under Unif[-1, 1].

    Bonnet's recurrence ``(k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}`` gives the
    classical polynomials; multiplying by ``sqrt(2k+1)`` makes
    ``E[p_k^2] = 1`` for the uniform measure.
    """
    x = np.asarray(x, dtype=float)
    P = np.empty((x.size, d))
    P[:, 0] = 1.0
    if d > 1:
        P[:, 1] = x
    for k in range(1, d - 1):
        P[:, k + 1] = ((2 * k + 1) * x * P[:, k] - k * P[:, k - 1]) / (k + 1)
    return P * np.sqrt(2 * np.arange(d) + 1)


def monomial_moment_matrix(d: int) -> np.ndarray:
    """Hankel matrix ``E[X^{a+b}]`` for ``X ~ Unif[-1, 1]``."""
    m = np.add.outer(np.arange(d), np.arange(d))
    return np.where(m % 2 == 0, 1.0 / (m + 1), 0.0)


def sample_features(family: FeatureFamily, scheme: SamplingScheme | None, n: int,
                    rng: Rng | None = None):
    """Draw an ``n x d`` feature matrix. Returns ``(A, x)``; ``x`` is None for Gaussian kinds."""
    rng = as_rng(rng)
    d = family.d
    kind = family.kind
    if kind in _COVARIATE_KINDS:
        scheme = scheme or SamplingScheme.uniform()
        x = scheme.points(n, family, rng)
        if kind is Kind.FOURIER:
            return fourier_features(x, d), x
        if kind is Kind.LEGENDRE:
            return legendre_features(x, d), x
        return vandermonde_features(x, d), x
    if scheme is not None and scheme.domain is not None:
        raise InvalidDomain("Gaussian features take no covariate domain")
    Z = rng.gen.standard_normal((n, d))
    if kind is Kind.GAUSSIAN_IID:
        return Z, None
    if kind is Kind.GAUSSIAN_SHIFTED_MEAN:
        return family.mean + np.sqrt(family.var) * Z, None
    L = np.linalg.cholesky(family.cov)
    return Z @ L.T, None


def build_design(family: FeatureFamily, scheme: SamplingScheme | None, n: int,
                 rng: Rng | None = None, whiten: bool = True):
    """Sample the training design and its whitened view.

    Returns ``(A, x, view)``. ``view`` is None when ``whiten`` is False, which
    is the only option for Vandermonde features of moderate degree (their
    moment matrix drops below the whitening floor around d = 12).
    """
    if n < 1:
        raise ValueError("n must be positive")
    A, x = sample_features(family, scheme, n, rng)
    view = family.whitened(A) if whiten else None
    return A, x, view


def alias_index_set(k_star: int, n: int, d: int) -> np.ndarray:
    """Indices ``k* + l n`` for ``l = 1..M`` where ``d = (M+1) n``."""
    if n < 1 or d % n != 0:
        raise NotMultiple(f"n={n} does not divide d={d}")
    if not 0 <= k_star < n:
        raise ValueError(f"k_star must lie in [0, {n})")
    M = d // n - 1
    return k_star + n * np.arange(1, M + 1)
