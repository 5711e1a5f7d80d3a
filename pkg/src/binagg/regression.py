"""Bias-corrected weighted least squares on privatized bin summaries.

With noisy feature sums S (rows s_k), noisy label sums t, weights
w_k = 1 / noisy_count_k, and D_k the diagonal covariance of the noise
injected into s_k, the estimator solves the estimating equation

    sum_k [ s_k w_k (t_k - s_k' b) + w_k D_k b ] = 0,

whose root is

    beta = (S' W S - sum_k w_k D_k)^{-1} S' W t.

Subtracting sum_k w_k D_k removes the attenuation that the feature-sum
noise would otherwise cause; dropping it gives the naive estimator.
The sandwich covariance

    Sigma = M^{-1} H M^{-1},
    M = (1/K) S' W S - (1/K) sum_k w_k D_k,
    H = (1/(K (K - d))) sum_k Q_k Q_k',
    Q_k = s_k w_k (t_k - s_k' beta) + w_k D_k beta,

yields asymptotically valid per-coordinate confidence intervals
beta_j +/- z_{alpha/2} sqrt(Sigma_jj).

A compatibility flag ``literal_debias`` divides the correction by K
before subtracting. That variant mismatches the estimating equation
above (its root no longer zeroes the summed scores) and is off by
default; it exists only to reproduce runs that used the scaled form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aggregation import PreparedBins
from .errors import InsufficientBinsError, SingularSystemError
from .gdp import RandomSource, std_normal_quantile

__all__ = [
    "PrivatizedSummaries",
    "PrivateFit",
    "privatize",
    "fit_debiased",
    "fit_naive",
    "covariance",
    "naive_covariance",
    "estimating_scores",
    "confidence_intervals",
    "private_fit",
    "wls_exact",
    "ols_exact",
]

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class PrivatizedSummaries:
    """Noisy per-bin sums ready for fitting.

    S : (K, d) noisy feature sums, one row per bin.
    t : (K,) noisy label sums.
    weights : (K,) reciprocals of the noisy counts, in (0, 1].
    noise_var : (K, d) variance of the noise added to each entry of S
        (the diagonal of D_k), zero in noiseless mode.
    """

    S: np.ndarray
    t: np.ndarray
    weights: np.ndarray
    noise_var: np.ndarray

    @property
    def K(self) -> int:
        return self.S.shape[0]

    @property
    def d(self) -> int:
        return self.S.shape[1]


@dataclass(frozen=True)
class PrivateFit:
    """Point estimate, covariance, and confidence intervals of one fit."""

    beta: np.ndarray
    sigma: np.ndarray
    alpha: float
    intervals: np.ndarray
    K: int
    d: int

    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.sigma), 0.0, None))


def privatize(
    prepared: PreparedBins,
    mu_s: float,
    mu_t: float,
    rng: RandomSource,
    noiseless: bool = False,
    strict_l2: bool = False,
) -> PrivatizedSummaries:
    """Add calibrated Gaussian noise to the per-bin sums.

    Per bin k, coordinate i of the feature sum receives noise with
    standard deviation Delta_ki / mu_s where Delta_k is the bin's
    sensitivity vector; the label sum receives label_bound / mu_t.
    With ``strict_l2`` every coordinate instead uses ||Delta_k||_2 /
    mu_s, the conservative multivariate calibration. ``noiseless``
    zeroes all noise (and the recorded variances) for test/debug runs.
    """
    for name, v in (("mu_s", mu_s), ("mu_t", mu_t)):
        if not (math.isfinite(float(v)) and float(v) > 0.0):
            raise ValueError(f"{name} must be a finite positive real, got {v}")
    mu_s = float(mu_s)
    mu_t = float(mu_t)

    K, d = prepared.K, prepared.d
    S = np.array([b.sum_x for b in prepared.bins], dtype=float).reshape(K, d)
    t = np.array([b.sum_y for b in prepared.bins], dtype=float)
    weights = np.array([1.0 / b.noisy_count for b in prepared.bins], dtype=float)
    sens = np.array([b.sensitivity for b in prepared.bins], dtype=float).reshape(K, d)

    if strict_l2:
        scale_s = np.repeat(
            np.linalg.norm(sens, axis=1, keepdims=True) / mu_s, d, axis=1
        )
    else:
        scale_s = sens / mu_s
    scale_t = prepared.label_bound / mu_t

    if noiseless:
        noise_var = np.zeros((K, d))
    else:
        gen = rng.generator
        S = S + gen.normal(0.0, 1.0, size=(K, d)) * scale_s
        t = t + gen.normal(0.0, 1.0, size=K) * scale_t
        noise_var = scale_s**2
    return PrivatizedSummaries(S=S, t=t, weights=weights, noise_var=noise_var)


def _guarded_solve(A: np.ndarray, B: np.ndarray, what: str) -> np.ndarray:
    # SVD-based condition estimate; rejects near-singular systems instead
    # of returning garbage
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError(
            f"{what}: condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )
    return np.linalg.solve(A, B)


def _gram(priv: PrivatizedSummaries) -> np.ndarray:
    return priv.S.T @ (priv.weights[:, None] * priv.S)


def _debias_matrix(priv: PrivatizedSummaries) -> np.ndarray:
    return np.diag((priv.weights[:, None] * priv.noise_var).sum(axis=0))


def fit_debiased(priv: PrivatizedSummaries, literal_debias: bool = False) -> np.ndarray:
    """Noise-bias-corrected WLS coefficients.

    Solves (S' W S - sum_k w_k D_k) beta = S' W t. Requires K > d.
    """
    if priv.K <= priv.d:
        raise InsufficientBinsError(f"need more bins than coefficients: K={priv.K}, d={priv.d}")
    correction = _debias_matrix(priv)
    if literal_debias:
        correction = correction / priv.K
    A = _gram(priv) - correction
    rhs = priv.S.T @ (priv.weights * priv.t)
    return _guarded_solve(A, rhs, "debiased normal equations")


def fit_naive(priv: PrivatizedSummaries) -> np.ndarray:
    """Plain WLS on the noisy sums, no attenuation correction."""
    if priv.K <= priv.d:
        raise InsufficientBinsError(f"need more bins than coefficients: K={priv.K}, d={priv.d}")
    rhs = priv.S.T @ (priv.weights * priv.t)
    return _guarded_solve(_gram(priv), rhs, "naive normal equations")


def estimating_scores(priv: PrivatizedSummaries, beta: np.ndarray) -> np.ndarray:
    """Per-bin scores Q_k(beta), shape (K, d); they sum to ~0 at the debiased fit."""
    beta = np.asarray(beta, dtype=float)
    resid = priv.t - priv.S @ beta
    return priv.S * (priv.weights * resid)[:, None] + \
        priv.weights[:, None] * priv.noise_var * beta[None, :]


def covariance(priv: PrivatizedSummaries, beta: np.ndarray) -> np.ndarray:
    """Sandwich covariance of the debiased estimator at ``beta``."""
    K, d = priv.K, priv.d
    if K <= d:
        raise InsufficientBinsError(f"need more bins than coefficients: K={K}, d={d}")
    M = (_gram(priv) - _debias_matrix(priv)) / K
    Q = estimating_scores(priv, beta)
    H = Q.T @ Q / (K * (K - d))
    inner = _guarded_solve(M, H, "sandwich bread")
    sigma = _guarded_solve(M, inner.T, "sandwich bread").T
    return 0.5 * (sigma + sigma.T)


def naive_covariance(priv: PrivatizedSummaries, sigma2: float = 1.0) -> np.ndarray:
    """Classical plug-in covariance sigma2 * (S' W S)^{-1}.

    Ignores the injected noise entirely, which is what makes it naive;
    ``sigma2`` is the assumed regression error variance.
    """
    sigma2 = float(sigma2)
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError(f"sigma2 must be a finite positive real, got {sigma2}")
    G = _gram(priv)
    inv = _guarded_solve(G, np.eye(priv.d), "naive covariance")
    sigma = sigma2 * inv
    return 0.5 * (sigma + sigma.T)


def confidence_intervals(beta: np.ndarray, sigma: np.ndarray, alpha: float = 0.05) -> np.ndarray:
    """Per-coordinate normal intervals beta_j +/- z_{alpha/2} * sqrt(Sigma_jj)."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    beta = np.asarray(beta, dtype=float)
    z = std_normal_quantile(1.0 - alpha / 2.0)
    half = z * np.sqrt(np.clip(np.diag(np.asarray(sigma, dtype=float)), 0.0, None))
    return np.column_stack([beta - half, beta + half])


def private_fit(
    priv: PrivatizedSummaries,
    alpha: float = 0.05,
    literal_debias: bool = False,
) -> PrivateFit:
    """Debiased coefficients with sandwich covariance and intervals."""
    beta = fit_debiased(priv, literal_debias=literal_debias)
    sigma = covariance(priv, beta)
    return PrivateFit(
        beta=beta,
        sigma=sigma,
        alpha=alpha,
        intervals=confidence_intervals(beta, sigma, alpha),
        K=priv.K,
        d=priv.d,
    )


def wls_exact(S: np.ndarray, weights: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Exact weighted least squares (S' W S)^{-1} S' W t, no privacy."""
    S = np.asarray(S, dtype=float)
    weights = np.asarray(weights, dtype=float).reshape(-1)
    t = np.asarray(t, dtype=float).reshape(-1)
    if S.ndim != 2 or S.shape[0] != weights.shape[0] or S.shape[0] != t.shape[0]:
        raise ValueError("S, weights, t must have matching row counts")
    if (weights <= 0).any():
        raise ValueError("weights must be strictly positive")
    G = S.T @ (weights[:, None] * S)
    return _guarded_solve(G, S.T @ (weights * t), "weighted least squares")


def ols_exact(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Ordinary least squares on row-level data, no privacy."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y must have matching row counts")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularSystemError(f"design matrix rank {rank} < {X.shape[1]} columns")
    return beta
