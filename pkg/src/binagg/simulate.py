"""Synthetic linear-model data for the experiment harness.

Each repetition draws fresh coefficients beta ~ Uniform([1, 2]^d),
features X ~ Uniform([0, 1]^(n x d)), and labels y = X beta + N(0,
sigma^2) noise. Feature bounds default to the unit cube; label clip
bounds default to (0, 2) / (0, 7) / (0, 15) for d = 1 / 5 / 10 and to
(0, 1.5 d + 0.5) otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gdp import RandomSource
from .pipeline import FitConfig

__all__ = [
    "SimulationConfig",
    "default_label_bounds",
    "simulate_dataset",
    "relative_l2_error",
    "relative_mse",
]

_LABEL_BOUNDS = {1: (0.0, 2.0), 5: (0.0, 7.0), 10: (0.0, 15.0)}


def default_label_bounds(d: int) -> tuple[float, float]:
    return _LABEL_BOUNDS.get(d, (0.0, 1.5 * d + 0.5))


@dataclass
class SimulationConfig:
    """Data protocol and pipeline knobs for one simulation study."""

    n: int = 1000
    d: int = 5
    sigma: float = 1.0
    repetitions: int = 100
    base_seed: int = 0
    feature_bounds: list[tuple[float, float]] | None = None
    label_bounds: tuple[float, float] | None = None
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.n <= self.d:
            raise ValueError(f"n must exceed d, got n={self.n}, d={self.d}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if self.feature_bounds is None:
            self.feature_bounds = [(0.0, 1.0)] * self.d
        if len(self.feature_bounds) != self.d:
            raise ValueError(
                f"feature_bounds has {len(self.feature_bounds)} entries for d={self.d}"
            )
        if self.label_bounds is None:
            self.label_bounds = default_label_bounds(self.d)


def simulate_dataset(cfg: SimulationConfig, rng: RandomSource) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One unclipped draw (X, y, beta); beta first, then X, then label noise."""
    gen = rng.generator
    beta = gen.uniform(1.0, 2.0, size=cfg.d)
    X = gen.uniform(0.0, 1.0, size=(cfg.n, cfg.d))
    y = X @ beta + gen.normal(0.0, 1.0, size=cfg.n) * cfg.sigma
    return X, y, beta


def relative_l2_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    """||estimate - truth||_2 / ||truth||_2."""
    estimate = np.asarray(estimate, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    denom = float(np.linalg.norm(truth))
    if denom == 0.0:
        raise ValueError("truth vector is zero; relative error undefined")
    return float(np.linalg.norm(estimate - truth)) / denom


def relative_mse(predicted: np.ndarray, actual: np.ndarray) -> float:
    """||predicted - actual||_2^2 / ||actual||_2^2."""
    predicted = np.asarray(predicted, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if predicted.shape != actual.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {actual.shape}")
    denom = float(actual @ actual)
    if denom == 0.0:
        raise ValueError("actual vector is zero; relative MSE undefined")
    diff = predicted - actual
    return float(diff @ diff) / denom