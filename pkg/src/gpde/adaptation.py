"""Adapt a trained source-domain GP to scarce target data without refitting.

The source expert's posterior, evaluated at the target training inputs, acts
as a prior for the target data.  Observing the target labels then corrects
the source prediction at any test point:

    mean_adapted = mean_source + cross^T (V + noise_s^2 I)^-1 (Y_t - prior_mean)
    var_adapted  = var_source  - cross^T (V + noise_s^2 I)^-1 cross

where ``V`` is the source-posterior covariance between the target inputs and
``cross`` the source-posterior covariance between target inputs and test
points.  This is exactly sequential Gaussian conditioning, so the result
matches a joint GP conditioned on source and target data with the source
noise; the source hyperparameters are reused throughout (no retraining).

The correction only ever shrinks the predictive variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import InvalidInputError
from .gp_core import Dataset, Expert, PosteriorPrediction, cholesky_with_jitter, posterior
from .kernel import kernel_matrix

__all__ = ["ConditionedPrior", "AdaptedExpert", "conditional_prior", "adapted_posterior"]


@dataclass(frozen=True)
class ConditionedPrior:
    """Source-posterior mean (N_t x C) and covariance (N_t x N_t) at target inputs."""

    mean: np.ndarray
    cov: np.ndarray


def _check_dim(e: Expert, X: np.ndarray, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != e.data.dim:
        raise InvalidInputError(
            f"{name} has D={X.shape[1]}, source expert was trained with D={e.data.dim}"
        )
    return X


def conditional_prior(source: Expert, X_t) -> ConditionedPrior:
    """Source posterior evaluated jointly at the target inputs ``X_t`` (N_t x D).

    The covariance is the full N_t x N_t matrix (not just its diagonal),
    symmetrized to remove floating-point asymmetry.
    """
    X_t = _check_dim(source, X_t, "X_t")
    K_st = kernel_matrix(source.data.X, X_t, h=source.hyper)  # N_s x N_t
    mean = K_st.T @ source.alpha
    v = solve_triangular(source.chol, K_st, lower=True, check_finite=False)
    K_tt = kernel_matrix(X_t, h=source.hyper)
    cov = K_tt - v.T @ v
    cov = 0.5 * (cov + cov.T)
    return ConditionedPrior(mean=mean, cov=cov)


class AdaptedExpert:
    """A source expert conditioned on one target training set.

    Caches the target-side factorization (the expensive, test-independent
    part); cross-covariances are computed per prediction batch.  Instances
    are immutable after construction and safe to share across batches.
    """

    def __init__(self, source: Expert, target: Dataset):
        if target.dim != source.data.dim:
            raise InvalidInputError(
                f"target has D={target.dim}, source expert has D={source.data.dim}"
            )
        if target.n_outputs != source.data.n_outputs:
            raise InvalidInputError(
                f"target has C={target.n_outputs}, source expert has C={source.data.n_outputs}"
            )
        self.source = source
        self.target = target
        self.prior = conditional_prior(source, target.X)
        noise_var = source.hyper.noise_std**2  # source noise, also on target observations
        C_t = self.prior.cov + noise_var * np.eye(target.n)
        self._chol_t, self.jitter = cholesky_with_jitter(C_t)
        # N_s x N_t half-solve, reused for every cross-covariance batch
        K_st = kernel_matrix(source.data.X, target.X, h=source.hyper)
        self._v_t = solve_triangular(source.chol, K_st, lower=True, check_finite=False)
        self._correction = cho_solve((self._chol_t, True), target.Y - self.prior.mean,
                                     check_finite=False)

    def cross_covariance(self, X_star: np.ndarray) -> np.ndarray:
        """Source-posterior covariance between target inputs and test points (N_t x M)."""
        K_t_star = kernel_matrix(self.target.X, X_star, h=self.source.hyper)
        K_s_star = kernel_matrix(self.source.data.X, X_star, h=self.source.hyper)
        v_star = solve_triangular(self.source.chol, K_s_star, lower=True, check_finite=False)
        return K_t_star - self._v_t.T @ v_star

    def posterior(self, X_star) -> PosteriorPrediction:
        """Adapted predictive mean and variance at ``X_star`` (M x D)."""
        X_star = _check_dim(self.source, X_star, "X_star")
        base = posterior(self.source, X_star)
        cross = self.cross_covariance(X_star)
        mean = base.mean + cross.T @ self._correction
        u = solve_triangular(self._chol_t, cross, lower=True, check_finite=False)
        variance = base.variance - np.sum(u * u, axis=0)
        np.maximum(variance, 0.0, out=variance)
        return PosteriorPrediction(mean=mean, variance=variance)


def adapted_posterior(source: Expert, target: Dataset | None, X_star) -> PosteriorPrediction:
    """Source prediction at ``X_star`` corrected by the target training set.

    ``target=None`` stands for the empty target set, in which case the
    correction vanishes and the plain source posterior is returned.
    """
    if target is None:
        return posterior(source, _check_dim(source, X_star, "X_star"))
    return AdaptedExpert(source, target).posterior(X_star)
