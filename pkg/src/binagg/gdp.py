"""Gaussian differential privacy primitives.

Budget composition and allocation, conversions between the Gaussian
parameterization and the (epsilon, delta) / pure-epsilon ones, the
Gaussian and Laplace mechanisms, and the seeded randomness contract
used by every stochastic operation in this package.

A release is mu-GDP when distinguishing two neighboring datasets from
its output is at least as hard as telling N(0, 1) apart from N(mu, 1).
Budgets compose in root-sum-of-squares, so a pipeline that spends
mu_1, ..., mu_m overall satisfies sqrt(mu_1^2 + ... + mu_m^2)-GDP.

The normal CDF and quantile are implemented here in double precision
(erfc-based CDF; rational approximation plus one Halley step for the
quantile) so the numerical core has no dependency beyond the standard
library and numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "RandomSource",
    "BudgetAllocation",
    "ApproxDpParams",
    "compose",
    "allocate",
    "gaussian_mechanism",
    "sample_laplace",
    "std_normal_cdf",
    "std_normal_quantile",
    "gdp_to_approx_dp",
    "pure_dp_to_gdp",
    "gdp_to_pure_dp",
    "epsilon_for_delta",
]

_MAX_SEED = 2**64


class RandomSource:
    """Reproducible random stream keyed by (seed, stream).

    The same (seed, stream) pair always yields the identical sequence of
    draws; distinct stream ids yield statistically independent streams.
    Every stochastic operation in the package takes a RandomSource
    explicitly and never touches global RNG state, so a pipeline is
    replayed bit for bit by re-running it with the same source.

    Parameters
    ----------
    seed : int
        Base seed, 0 <= seed < 2**64.
    stream : int, optional
        Stream id, >= 0. Use one id per independent unit of work
        (e.g. one per simulation repetition).
    """

    __slots__ = ("seed", "stream", "_generator")

    def __init__(self, seed: int, stream: int = 0):
        seed = int(seed)
        stream = int(stream)
        if not 0 <= seed < _MAX_SEED:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        if stream < 0:
            raise ValueError(f"stream must be >= 0, got {stream}")
        self.seed = seed
        self.stream = stream
        sequence = np.random.SeedSequence(seed, spawn_key=(stream,))
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy Generator (stateful; draws advance it)."""
        return self._generator

    def sibling(self, stream: int) -> "RandomSource":
        """A fresh source with the same seed and a different stream id."""
        return RandomSource(self.seed, stream)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


def _check_mu(mu: float, name: str = "mu") -> float:
    mu = float(mu)
    if not math.isfinite(mu) or mu <= 0.0:
        raise ValueError(f"{name} must be a finite positive real, got {mu}")
    return mu


@dataclass(frozen=True)
class BudgetAllocation:
    """Per-stage GDP budgets for one end-to-end release.

    The four stages spend on: bin structure (mu_bin), bin counts (mu_c),
    per-bin feature sums (mu_s), and per-bin label sums (mu_t).
    """

    mu_bin: float
    mu_c: float
    mu_s: float
    mu_t: float

    def __post_init__(self):
        for name in ("mu_bin", "mu_c", "mu_s", "mu_t"):
            _check_mu(getattr(self, name), name)

    def total(self) -> float:
        """Composed budget of the four stages."""
        return compose([self.mu_bin, self.mu_c, self.mu_s, self.mu_t])


@dataclass(frozen=True)
class ApproxDpParams:
    """An (epsilon, delta) approximate-DP guarantee."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not math.isfinite(self.epsilon) or self.epsilon < 0.0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")


def compose(budgets: Sequence[float]) -> float:
    """Compose GDP budgets in root-sum-of-squares.

    Parameters
    ----------
    budgets : sequence of positive float
        Individual mu values.

    Returns
    -------
    float
        sqrt(sum of mu_i^2).

    Examples
    --------
    >>> compose([3.0, 4.0])
    5.0
    """
    values = [_check_mu(b, "budget") for b in budgets]
    if not values:
        raise ValueError("compose requires at least one budget")
    return math.sqrt(math.fsum(v * v for v in values))


def allocate(total_mu: float, ratios: Sequence[float] = (1.0, 3.0, 3.0, 3.0)) -> BudgetAllocation:
    """Split a total GDP budget across the four pipeline stages.

    Stage i receives total_mu * r_i / sqrt(sum r_j^2), so the composed
    budget of the allocation equals total_mu exactly.

    Parameters
    ----------
    total_mu : float
        Overall budget for the release.
    ratios : sequence of 4 positive floats, optional
        Relative spends for (bin structure, counts, feature sums,
        label sums). Default 1:3:3:3.

    Returns
    -------
    BudgetAllocation

    Examples
    --------
    >>> alloc = allocate(1.0, (1, 3, 3, 3))
    >>> round(alloc.mu_bin, 5)
    0.18898
    >>> round(alloc.total(), 12)
    1.0
    """
    total_mu = _check_mu(total_mu, "total_mu")
    ratios = [float(r) for r in ratios]
    if len(ratios) != 4:
        raise ValueError(f"ratios must have length 4, got {len(ratios)}")
    for r in ratios:
        if not math.isfinite(r) or r <= 0.0:
            raise ValueError(f"ratios must be finite positive reals, got {ratios}")
    norm = math.sqrt(math.fsum(r * r for r in ratios))
    parts = [total_mu * r / norm for r in ratios]
    return BudgetAllocation(*parts)


def gaussian_mechanism(value: float, sensitivity: float, mu: float, rng: RandomSource) -> float:
    """Release a scalar under mu-GDP via additive Gaussian noise.

    Adds N(0, (sensitivity / mu)^2) to ``value``. A sensitivity of zero
    returns the value unchanged without consuming a draw.

    Parameters
    ----------
    value : float
        Quantity to privatize.
    sensitivity : float
        L2 sensitivity of the quantity, >= 0.
    mu : float
        GDP budget to spend.
    rng : RandomSource
        Noise source.
    """
    value = float(value)
    sensitivity = float(sensitivity)
    mu = _check_mu(mu)
    if not math.isfinite(value):
        raise ValueError(f"value must be finite, got {value}")
    if not math.isfinite(sensitivity) or sensitivity < 0.0:
        raise ValueError(f"sensitivity must be finite and >= 0, got {sensitivity}")
    if sensitivity == 0.0:
        return value
    return value + float(rng.generator.normal(0.0, sensitivity / mu))


def sample_laplace(scale: float, rng: RandomSource) -> float:
    """Draw one sample from Laplace(0, scale)."""
    scale = float(scale)
    if not math.isfinite(scale) or scale <= 0.0:
        raise ValueError(f"scale must be a finite positive real, got {scale}")
    return float(rng.generator.laplace(0.0, scale))


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to about 1e-15 in double precision."""
    x = float(x)
    if math.isnan(x):
        raise ValueError("x must not be NaN")
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Rational approximation coefficients for the inverse normal CDF
# (central region and tails), sharpened below with one Halley step.
_Q_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
        1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_Q_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
        6.680131188771972e+01, -1.328068155288572e+01)
_Q_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
        -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_Q_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
        3.754408661907416e+00)
_Q_SPLIT = 0.02425


def std_normal_quantile(p: float) -> float:
    """Standard normal quantile (inverse CDF) for p in (0, 1).

    Accurate to well below 1e-10 over the full open interval; the
    initial rational approximation is polished with one Halley step
    against the erfc-based CDF.

    Examples
    --------
    >>> round(std_normal_quantile(0.975), 6)
    1.959964
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p}")
    a, b, c, d = _Q_A, _Q_B, _Q_C, _Q_D
    if p < _Q_SPLIT:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= 1.0 - _Q_SPLIT:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    # exp(x^2/2) overflows past |x| ~ 37.6; the raw approximation is the
    # best available out there anyway.
    if abs(x) < 37.0:
        e = std_normal_cdf(x) - p
        u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
        x = x - u / (1.0 + x * u / 2.0)
    return x


def gdp_to_approx_dp(mu: float, epsilon: float) -> ApproxDpParams:
    """Tightest delta such that mu-GDP implies (epsilon, delta)-DP.

    delta(eps) = Phi(-eps/mu + mu/2) - exp(eps) * Phi(-eps/mu - mu/2).

    Parameters
    ----------
    mu : float
        GDP budget, > 0.
    epsilon : float
        Approximate-DP epsilon, >= 0.

    Returns
    -------
    ApproxDpParams
        The pair (epsilon, delta) with delta in [0, 1).

    Examples
    --------
    >>> round(gdp_to_approx_dp(1.0, 1.0).delta, 6)
    0.126937
    """
    mu = _check_mu(mu)
    epsilon = float(epsilon)
    if not math.isfinite(epsilon) or epsilon < 0.0:
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    delta = std_normal_cdf(-epsilon / mu + mu / 2.0) \
        - math.exp(epsilon) * std_normal_cdf(-epsilon / mu - mu / 2.0)
    return ApproxDpParams(epsilon, max(delta, 0.0))


def pure_dp_to_gdp(epsilon: float) -> float:
    """Smallest mu such that epsilon-DP (pure) implies mu-GDP.

    mu = -2 * Phi^{-1}(1 / (1 + exp(epsilon))).

    Examples
    --------
    >>> round(pure_dp_to_gdp(1.0), 6)
    1.232035
    """
    epsilon = float(epsilon)
    if not math.isfinite(epsilon) or epsilon <= 0.0:
        raise ValueError(f"epsilon must be a finite positive real, got {epsilon}")
    # 1/(1+e^eps) written via exp(-eps) so large eps cannot overflow
    p = math.exp(-epsilon) / (1.0 + math.exp(-epsilon))
    return -2.0 * std_normal_quantile(p)


def gdp_to_pure_dp(mu: float) -> float:
    """Pure-DP epsilon whose GDP conversion is exactly mu.

    Closed-form inverse of :func:`pure_dp_to_gdp`:
    epsilon = log(Phi(mu/2) / Phi(-mu/2)).
    """
    mu = _check_mu(mu)
    return math.log(std_normal_cdf(mu / 2.0)) - math.log(std_normal_cdf(-mu / 2.0))


def epsilon_for_delta(mu: float, delta: float) -> float:
    """Epsilon at which mu-GDP meets a target delta.

    Solves gdp_to_approx_dp(mu, eps).delta = delta by bisection; the
    delta curve is continuous and strictly decreasing in eps. Returns
    0.0 when the target is already met at eps = 0.
    """
    mu = _check_mu(mu)
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie strictly inside (0, 1), got {delta}")
    if gdp_to_approx_dp(mu, 0.0).delta <= delta:
        return 0.0
    lo, hi = 0.0, 1.0
    while gdp_to_approx_dp(mu, hi).delta > delta:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("no epsilon below 1e6 meets the requested delta")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gdp_to_approx_dp(mu, mid).delta > delta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
