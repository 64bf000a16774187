"""Test error, error decompositions and the empirical parsimony coefficient."""

from __future__ import annotations

import numpy as np

from .core_model import DimensionMismatch, Rng, SparseLinearInstance, as_rng
from .features import FeatureFamily, SamplingScheme, sample_features


def test_mse_analytic(alpha_hat, inst: SparseLinearInstance, Sigma_half=None) -> float:
    """``|Sigma^{1/2} (alpha_hat - alpha_star)|^2``; identity ``Sigma`` when omitted."""
    err = np.asarray(alpha_hat) - inst.alpha_star
    if Sigma_half is None:
        return float(np.real(np.vdot(err, err)))
    Sigma_half = np.asarray(Sigma_half)
    if Sigma_half.shape != (err.size, err.size):
        raise DimensionMismatch(f"Sigma_half {Sigma_half.shape} vs d={err.size}")
    v = Sigma_half @ err
    return float(np.real(np.vdot(v, v)))


def test_mse_quadratic(alpha_hat, inst: SparseLinearInstance, Sigma) -> float:
    """Same quantity as :func:`test_mse_analytic` written as ``e^H Sigma e``.

    Avoids forming a square root, which matters for the badly conditioned
    monomial moment matrix.
    """
    err = np.asarray(alpha_hat) - inst.alpha_star
    return float(np.real(np.vdot(err, np.asarray(Sigma) @ err)))


def test_mse_empirical(alpha_hat, inst: SparseLinearInstance, family: FeatureFamily,
                       rng: Rng | None, n_test: int, target=None, batch: int = 20000):
    """Monte Carlo test MSE minus the noise variance, with its standard error.

    ``target`` optionally replaces the linear signal: a callable receiving
    ``(A_test, x_test)`` and returning the noiseless outputs. This is how
    targets outside the span of the features are evaluated.
    """
    if n_test < 1:
        raise ValueError("n_test must be positive")
    rng = as_rng(rng)
    alpha_hat = np.asarray(alpha_hat)
    # fresh test covariates are always i.i.d., whatever the training scheme
    test_scheme = SamplingScheme.uniform() if family.domain is not None else None
    sq = np.empty(n_test)
    done = 0
    while done < n_test:
        m = min(batch, n_test - done)
        A, x = sample_features(family, test_scheme, m, rng)
        clean = target(A, x) if target is not None else A @ inst.alpha_star
        noise = np.sqrt(inst.sigma2) * rng.gen.standard_normal(m)
        resid = clean + noise - A @ alpha_hat
        sq[done:done + m] = np.abs(resid) ** 2 - inst.sigma2
        done += m
    mean = float(sq.mean())
    stderr = float(sq.std(ddof=1) / np.sqrt(n_test)) if n_test > 1 else float("nan")
    return mean, stderr


def top_n_truncate(alpha, n: int) -> np.ndarray:
    """Keep the ``n`` largest-magnitude entries; ties go to the lower index."""
    alpha = np.asarray(alpha)
    if n >= alpha.size:
        return alpha.copy()
    order = np.lexsort((np.arange(alpha.size), -np.abs(alpha)))
    out = np.zeros_like(alpha)
    keep = order[:n]
    out[keep] = alpha[keep]
    return out


def parsimony_beta(interpolator, A, probe_outputs) -> float:
    """Smallest fraction of output energy captured by the top-``n`` coefficients.

    ``interpolator`` maps ``(A, Y)`` to a coefficient vector. The result is
    only a statement about the probes supplied, not about every output.
    """
    A = np.asarray(A)
    n = A.shape[0]
    ratios = []
    for Y in probe_outputs:
        Y = np.asarray(Y)
        energy = np.real(np.vdot(Y, Y))
        if energy == 0:
            raise ValueError("probe outputs must be nonzero")
        alpha = np.asarray(interpolator(A, Y))
        fit = A @ top_n_truncate(alpha, n)
        ratios.append(np.real(np.vdot(fit, fit)) / energy)
    return float(min(ratios))


def estimation_and_prediction_error(alpha_1, inst: SparseLinearInstance, A):
    """``(|alpha_1 - alpha*|^2, |A (alpha_1 - alpha*)|^2 / n)``."""
    err = np.asarray(alpha_1) - inst.alpha_star
    A = np.asarray(A)
    pred = A @ err
    e_est = float(np.real(np.vdot(err, err)))
    e_pred = float(np.real(np.vdot(pred, pred)) / A.shape[0])
    return e_est, e_pred


# keep pytest from collecting the public test_* helpers when imported into tests
test_mse_analytic.__test__ = False
test_mse_quadratic.__test__ = False
test_mse_empirical.__test__ = False
