"""Noisy-count screening and exact within-bin aggregation.

Given a bin partition, per-bin counts are privatized with Gaussian
noise and rounded; bins whose noisy count falls below a floor are
discarded. For the surviving bins the feature and label sums are
computed exactly; their privatization happens downstream, calibrated by
the per-bin sensitivity vector recorded here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyResultError
from .gdp import RandomSource
from .privtree import Box, contains_mask

__all__ = [
    "BinSummary",
    "PreparedBins",
    "sensitivity_vector",
    "assign_bins",
    "prepare",
]


def sensitivity_vector(box: Box) -> np.ndarray:
    """Per-coordinate worst-case magnitude of a point in the box.

    Entry i is max(|lower_i|, |upper_i|): how much one record can move
    the bin's feature sum along coordinate i.
    """
    return np.maximum(np.abs(np.asarray(box.lower)), np.abs(np.asarray(box.upper)))


def _envelope(bins: list[Box]) -> Box:
    lows = np.min([b.lower for b in bins], axis=0)
    ups = np.max([b.upper for b in bins], axis=0)
    return Box(tuple(lows), tuple(ups))


def assign_bins(X: np.ndarray, bins: list[Box], domain: Box | None = None) -> np.ndarray:
    """Index of the bin containing each row of X.

    ``domain`` fixes which upper faces count as closed; by default it is
    the envelope of the bins. Raises ValueError if any row lies in no
    bin or in more than one.
    """
    if not bins:
        raise ValueError("assign_bins requires at least one bin")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    if domain is None:
        domain = _envelope(bins)
    assigned = np.full(X.shape[0], -1, dtype=int)
    hits = np.zeros(X.shape[0], dtype=int)
    for k, box in enumerate(bins):
        mask = contains_mask(X, box, domain)
        hits += mask
        assigned[mask] = k
    bad = np.nonzero(hits != 1)[0]
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"row {i} matched {hits[i]} bins; bins must partition the domain "
            f"and every point must lie inside it"
        )
    return assigned


@dataclass(frozen=True)
class BinSummary:
    """One surviving bin: region, exact and noisy count, exact sums."""

    region: Box
    count: int
    noisy_count: int
    sum_x: np.ndarray
    sum_y: float
    sensitivity: np.ndarray


@dataclass(frozen=True)
class PreparedBins:
    """Surviving bins plus the label bound shared by all of them."""

    bins: tuple[BinSummary, ...]
    d: int
    label_bound: float
    intercept: bool = False
    discarded: int = 0

    @property
    def K(self) -> int:
        return len(self.bins)


def _round_half_away(x: float) -> int:
    # round-half-away-from-zero, unlike the builtin banker's rounding
    return int(math.floor(x + 0.5)) if x >= 0.0 else int(math.ceil(x - 0.5))


def prepare(
    X: np.ndarray,
    y: np.ndarray,
    bins: list[Box],
    mu_c: float,
    label_bound: float,
    rng: RandomSource,
    min_count: int = 2,
    noiseless: bool = False,
    intercept: bool = False,
) -> PreparedBins:
    """Screen bins by noisy count and aggregate the survivors exactly.

    Each bin count receives N(0, 1/mu_c^2) noise and is rounded half
    away from zero; bins with noisy count below ``min_count`` are
    dropped. Survivors keep their exact feature and label sums together
    with the sensitivity vector of their region; with ``intercept`` a
    constant coordinate (value 1 per record, sensitivity 1) is appended.

    ``noiseless=True`` keeps the exact counts (test/debug mode; voids
    the privacy guarantee). Raises EmptyResultError when every bin is
    discarded.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    label_bound = float(label_bound)
    if not (math.isfinite(label_bound) and label_bound > 0.0):
        raise ValueError(f"label_bound must be a finite positive real, got {label_bound}")
    if y.size and np.max(np.abs(y)) > label_bound:
        raise ValueError("labels exceed label_bound in magnitude; clip before preparing")
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    mu_c = float(mu_c)
    if not (math.isfinite(mu_c) and mu_c > 0.0):
        raise ValueError(f"mu_c must be a finite positive real, got {mu_c}")

    assigned = assign_bins(X, bins)
    counts = np.bincount(assigned, minlength=len(bins))

    gen = rng.generator
    summaries: list[BinSummary] = []
    discarded = 0
    for k, box in enumerate(bins):
        c = int(counts[k])
        if noiseless:
            noisy = c
        else:
            noisy = _round_half_away(c + float(gen.normal(0.0, 1.0 / mu_c)))
        if noisy < min_count:
            discarded += 1
            continue
        rows = assigned == k
        sum_x = X[rows].sum(axis=0)
        sum_y = float(y[rows].sum())
        sens = sensitivity_vector(box)
        if intercept:
            sum_x = np.append(sum_x, float(c))
            sens = np.append(sens, 1.0)
        summaries.append(
            BinSummary(
                region=box,
                count=c,
                noisy_count=noisy,
                sum_x=sum_x,
                sum_y=sum_y,
                sensitivity=sens,
            )
        )
    if not summaries:
        raise EmptyResultError(
            f"all {len(bins)} bins fell below the noisy-count floor {min_count}"
        )
    d = X.shape[1] + (1 if intercept else 0)
    return PreparedBins(
        bins=tuple(summaries),
        d=d,
        label_bound=label_bound,
        intercept=intercept,
        discarded=discarded,
    )
