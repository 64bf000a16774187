"""Generative model, datasets and the shared minimum-norm solve.

The linear model is ``Y = A @ alpha_star + W`` with ``W ~ N(0, sigma2 I)``.
Every estimator in the package consumes a :class:`TrainingSet`; the noise
vector is kept on it so that oracle quantities (ideal interpolator, error
decompositions) can be computed in experiments.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

DEFAULT_RANK_RTOL = 1e-10
EIGEN_FLOOR = 1e-12


class InterpError(Exception):
    """Base class for all errors raised by this package."""


class RankDeficient(InterpError):
    pass


class DimensionMismatch(InterpError):
    pass


class IllConditionedCovariance(InterpError):
    """A covariance eigenvalue fell below the whitening floor."""


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

def derive_seed(master_seed: int, *keys: int) -> int:
    """Stable 64-bit seed from a master seed and integer keys.

    Uses blake2b over little-endian packed integers, so the mapping does not
    depend on Python's randomized ``hash``.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<q", int(master_seed) & 0x7FFFFFFFFFFFFFFF))
    for k in keys:
        h.update(struct.pack("<q", int(k)))
    return int.from_bytes(h.digest(), "little") & 0x7FFFFFFFFFFFFFFF


@dataclass
class Rng:
    """Seeded random stream. One owner per instance.

    ``algorithm`` names the numpy bit generator; PCG64 output is specified
    bit-for-bit so identical seeds reproduce across platforms.
    """

    seed: int
    algorithm: str = "PCG64"
    gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        bitgen_cls = getattr(np.random, self.algorithm, None)
        if bitgen_cls is None or not issubclass(bitgen_cls, np.random.BitGenerator):
            raise ValueError(f"unknown bit generator {self.algorithm!r}")
        self.gen = np.random.Generator(bitgen_cls(int(self.seed)))

    def child(self, *keys: int) -> "Rng":
        """Independent stream keyed by ``(seed, *keys)``."""
        return Rng(derive_seed(self.seed, *keys), self.algorithm)


def as_rng(rng) -> Rng:
    if isinstance(rng, Rng):
        return rng
    if rng is None:
        return Rng(0)
    return Rng(int(rng))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SparseLinearInstance:
    """Ground truth of the (k, sigma)-sparse linear model."""

    alpha_star: np.ndarray
    sigma2: float
    k: int
    support_star: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha_star)
        supp = np.asarray(self.support_star, dtype=int)
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if supp.size > self.k:
            raise ValueError("support larger than sparsity bound k")
        off = np.ones(alpha.shape[0], dtype=bool)
        off[supp] = False
        if np.any(alpha[off] != 0):
            raise ValueError("alpha_star is nonzero off support_star")
        object.__setattr__(self, "alpha_star", alpha)
        object.__setattr__(self, "support_star", supp)

    @property
    def d(self) -> int:
        return self.alpha_star.shape[0]

    @classmethod
    def from_alpha(cls, alpha_star, sigma2: float) -> "SparseLinearInstance":
        alpha = np.asarray(alpha_star)
        supp = np.flatnonzero(alpha)
        return cls(alpha, float(sigma2), int(supp.size), supp)

    @classmethod
    def unit_support(cls, d: int, k: int, sigma2: float, rng: Rng | None = None,
                     value: float = 1.0) -> "SparseLinearInstance":
        """k entries equal to ``value``; the first k indices unless ``rng`` is given."""
        if rng is None:
            supp = np.arange(k)
        else:
            supp = np.sort(rng.gen.choice(d, size=k, replace=False))
        alpha = np.zeros(d)
        alpha[supp] = value
        return cls(alpha, float(sigma2), int(k), supp)

    @classmethod
    def pure_noise(cls, d: int, sigma2: float) -> "SparseLinearInstance":
        return cls(np.zeros(d), float(sigma2), 0, np.zeros(0, dtype=int))


@dataclass(frozen=True)
class TrainingSet:
    A: np.ndarray
    Y: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        if self.A.ndim != 2 or self.Y.shape != (self.A.shape[0],) or self.W.shape != self.Y.shape:
            raise DimensionMismatch(
                f"A {self.A.shape}, Y {self.Y.shape}, W {self.W.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def with_outputs(self, Y, W=None) -> "TrainingSet":
        Y = np.asarray(Y)
        return TrainingSet(self.A, Y, np.zeros(Y.shape, dtype=Y.dtype) if W is None else np.asarray(W))

    def full_row_rank(self, rtol: float = DEFAULT_RANK_RTOL) -> bool:
        s = np.linalg.svd(self.A, compute_uv=False)
        return self.n <= self.d and s[-1] > rtol * s[0]


def make_training_set(A: np.ndarray, inst: SparseLinearInstance, rng: Rng) -> TrainingSet:
    """Sample noise and form ``Y = A alpha_star + W``."""
    A = np.asarray(A)
    if A.shape[1] != inst.d:
        raise DimensionMismatch(f"A has {A.shape[1]} columns, alpha_star has {inst.d}")
    W = sample_noise(rng, A.shape[0], inst.sigma2)
    Y = A @ inst.alpha_star + W
    return TrainingSet(A, Y, W)


@dataclass(frozen=True)
class WhitenedView:
    """``B = A @ sigma_sqrt_inv`` together with the whitening matrix."""

    B: np.ndarray
    sigma_sqrt_inv: np.ndarray
    sigma_sqrt: np.ndarray | None = None

    @classmethod
    def from_covariance(cls, A: np.ndarray, Sigma: np.ndarray,
                        floor: float = EIGEN_FLOOR) -> "WhitenedView":
        inv_half, half = covariance_roots(Sigma, floor)
        return cls(A @ inv_half, inv_half, half)

    @classmethod
    def identity(cls, A: np.ndarray) -> "WhitenedView":
        eye = np.eye(A.shape[1])
        return cls(A, eye, eye)


def covariance_roots(Sigma: np.ndarray, floor: float = EIGEN_FLOOR):
    """Symmetric ``Sigma^{-1/2}`` and ``Sigma^{1/2}`` via eigendecomposition."""
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise DimensionMismatch("covariance must be square")
    evals, evecs = np.linalg.eigh(0.5 * (Sigma + Sigma.T))
    if evals[0] <= floor:
        raise IllConditionedCovariance(
            f"smallest covariance eigenvalue {evals[0]:.3e} below floor {floor:.0e}")
    inv_half = (evecs / np.sqrt(evals)) @ evecs.T
    half = (evecs * np.sqrt(evals)) @ evecs.T
    return 0.5 * (inv_half + inv_half.T), 0.5 * (half + half.T)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _realify(M: np.ndarray, y: np.ndarray):
    # [[P, -Q], [Q, P]] [a; b] = [Re y; Im y] for M = P + iQ, x = a + ib
    P, Q = M.real, M.imag
    top = np.hstack([P, -Q])
    bot = np.hstack([Q, P])
    return np.vstack([top, bot]), np.concatenate([y.real, y.imag])


def min_norm_solve(M: np.ndarray, y: np.ndarray, rtol: float = DEFAULT_RANK_RTOL,
                   rank_tol: float | None = None) -> np.ndarray:
    """Minimum Euclidean norm solution of ``M x = y`` for wide full-row-rank ``M``.

    Computes ``M^T (M M^T)^{-1} y`` through a thin SVD. ``rank_tol`` is an
    absolute singular-value threshold; if omitted it is ``rtol`` times the
    largest singular value. Complex systems are solved as the equivalent real
    system of twice the size and returned as complex vectors.
    """
    M = np.asarray(M)
    y = np.asarray(y)
    if M.ndim != 2 or y.shape != (M.shape[0],):
        raise DimensionMismatch(f"M {M.shape} incompatible with y {y.shape}")
    n, d = M.shape
    if n > d:
        raise DimensionMismatch(f"need n <= d, got {n} x {d}")
    if np.iscomplexobj(M) or np.iscomplexobj(y):
        M_r, y_r = _realify(M.astype(complex), y.astype(complex))
        x_r = min_norm_solve(M_r, y_r, rtol=rtol, rank_tol=rank_tol)
        return x_r[:d] + 1j * x_r[d:]
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    thresh = rtol * s[0] if rank_tol is None else rank_tol
    if s.size == 0 or s[-1] <= thresh:
        raise RankDeficient(
            f"smallest singular value {s[-1] if s.size else 0.0:.3e} <= tolerance {thresh:.3e}")
    return Vt.T @ ((U.T @ y) / s)


def sample_noise(rng: Rng, n: int, sigma2: float) -> np.ndarray:
    """i.i.d. ``N(0, sigma2)`` draws from ``rng``."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    z = rng.gen.standard_normal(n)
    return np.sqrt(sigma2) * z
