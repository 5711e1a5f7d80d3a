"""Differentially private recursive partitioning of a feature domain.

Starting from the full domain box, nodes are split along their widest
dimension at the midpoint whenever a depth-penalized, Laplace-noised
count exceeds a threshold. The released bin boundaries are pure-DP;
``calibrate`` derives the Laplace scale and depth penalty from a GDP
budget so the partition composes with the rest of the pipeline.

Cells are half-open, [lower, upper) in every dimension, except that a
cell whose upper face coincides with the domain's upper face keeps that
face closed. Membership tests therefore assign every domain point to
exactly one leaf.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .gdp import RandomSource, gdp_to_pure_dp

__all__ = [
    "Box",
    "PrivTreeConfig",
    "widest_dimension",
    "calibrate",
    "build",
    "contains_mask",
]


@dataclass(frozen=True)
class Box:
    """An axis-aligned box with strictly positive width in every dimension."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if len(lower) == 0 or len(lower) != len(upper):
            raise ValueError("box needs matching, nonempty lower/upper corners")
        for lo, up in zip(lower, upper):
            if not (math.isfinite(lo) and math.isfinite(up)):
                raise ValueError(f"box corners must be finite, got [{lo}, {up}]")
            if not lo < up:
                raise ValueError(f"box side is empty or degenerate: [{lo}, {up})")

    @property
    def d(self) -> int:
        return len(self.lower)

    def widths(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float) - np.asarray(self.lower, dtype=float)

    def volume(self) -> float:
        return float(np.prod(self.widths()))

    def split(self, dim: int) -> tuple["Box", "Box"]:
        """Halve the box along ``dim`` at the midpoint; (lower, upper) halves."""
        if not 0 <= dim < self.d:
            raise ValueError(f"dim {dim} out of range for d={self.d}")
        mid = 0.5 * (self.lower[dim] + self.upper[dim])
        if not self.lower[dim] < mid < self.upper[dim]:
            raise ValueError(f"side [{self.lower[dim]}, {self.upper[dim]}) too thin to split")
        upper_of_low = list(self.upper)
        upper_of_low[dim] = mid
        lower_of_high = list(self.lower)
        lower_of_high[dim] = mid
        return Box(self.lower, tuple(upper_of_low)), Box(tuple(lower_of_high), self.upper)


def widest_dimension(box: Box) -> int:
    """Index of the widest side; ties go to the lowest index."""
    widths = box.widths()
    return int(np.argmax(widths))


@dataclass(frozen=True)
class PrivTreeConfig:
    """Split-rule parameters: threshold, Laplace scale, depth penalty, depth cap."""

    theta: float = 0.0
    laplace_scale: float = 3.0
    delta_decay: float = 3.0 * math.log(2.0)
    max_depth: int = 40

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta}")
        if not (math.isfinite(self.laplace_scale) and self.laplace_scale > 0.0):
            raise ValueError(f"laplace_scale must be positive, got {self.laplace_scale}")
        if not (math.isfinite(self.delta_decay) and self.delta_decay > 0.0):
            raise ValueError(f"delta_decay must be positive, got {self.delta_decay}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")


def calibrate(mu_bin: float, theta: float = 0.0, max_depth: int = 40) -> PrivTreeConfig:
    """Split-rule parameters spending a GDP budget on the partition.

    The binary splitting rule is epsilon-DP with Laplace scale
    3 / epsilon and depth penalty scale * ln 2; epsilon is the pure-DP
    equivalent of ``mu_bin``.

    Examples
    --------
    >>> cfg = calibrate(pure_dp_to_gdp(1.0))  # doctest: +SKIP
    >>> (cfg.laplace_scale, cfg.delta_decay)  # doctest: +SKIP
    (3.0, 2.0794415416798357)
    """
    epsilon = gdp_to_pure_dp(mu_bin)
    scale = 3.0 / epsilon
    return PrivTreeConfig(
        theta=float(theta),
        laplace_scale=scale,
        delta_decay=scale * math.log(2.0),
        max_depth=int(max_depth),
    )


def build(
    data: np.ndarray,
    domain: Box,
    config: PrivTreeConfig,
    rng: RandomSource,
    noiseless: bool = False,
) -> list[Box]:
    """Partition ``domain`` into leaf boxes driven by noisy point counts.

    Nodes are visited in BFS order; for each node the score is
    count - depth * delta_decay, clamped from below at
    theta - delta_decay, plus Laplace(laplace_scale) noise. A node
    splits when the noisy score exceeds theta and its depth is below
    max_depth. Children are enqueued lower half first.

    ``noiseless=True`` replaces every Laplace draw with zero. That mode
    exists for oracle tests and debugging only and voids the privacy
    guarantee of the released partition.

    Returns the leaf boxes in the order their nodes were retired.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        if X.size == 0:
            X = X.reshape(0, domain.d)
        else:
            raise ValueError(f"data must be 2-dimensional, got shape {X.shape}")
    if X.shape[1] != domain.d:
        raise ValueError(f"data has {X.shape[1]} columns, domain has {domain.d}")
    if X.size and not np.isfinite(X).all():
        raise ValueError("data contains non-finite values")
    lo = np.asarray(domain.lower)
    up = np.asarray(domain.upper)
    if X.size and ((X < lo).any() or (X > up).any()):
        raise ValueError("data contains points outside the domain; clip before building")

    gen = rng.generator
    leaves: list[Box] = []
    queue: deque[tuple[Box, int, np.ndarray]] = deque()
    queue.append((domain, 0, np.arange(X.shape[0])))
    while queue:
        box, depth, idx = queue.popleft()
        score = float(len(idx)) - depth * config.delta_decay
        score = max(score, config.theta - config.delta_decay)
        noisy = score if noiseless else score + float(gen.laplace(0.0, config.laplace_scale))
        can_split = depth < config.max_depth
        if can_split:
            dim = widest_dimension(box)
            # fp-degenerate sides cannot be halved; treat the node as a leaf
            mid = 0.5 * (box.lower[dim] + box.upper[dim])
            if not box.lower[dim] < mid < box.upper[dim]:
                can_split = False
        if noisy > config.theta and can_split:
            low_box, high_box = box.split(dim)
            values = X[idx, dim]
            below = values < mid
            queue.append((low_box, depth + 1, idx[below]))
            queue.append((high_box, depth + 1, idx[~below]))
        else:
            leaves.append(box)
    return leaves


def contains_mask(X: np.ndarray, box: Box, domain: Box) -> np.ndarray:
    """Boolean row mask for membership of points in a cell of ``domain``.

    Half-open convention: lower faces closed, upper faces open, except
    upper faces lying on the domain boundary, which are closed.
    """
    X = np.asarray(X, dtype=float)
    lo = np.asarray(box.lower)
    up = np.asarray(box.upper)
    dom_up = np.asarray(domain.upper)
    inside = (X >= lo) & ((X < up) | ((up == dom_up) & (X == up)))
    return inside.all(axis=1)
