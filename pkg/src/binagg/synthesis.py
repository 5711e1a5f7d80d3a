"""Synthetic record generation matched to the privatized aggregates.

Each surviving bin k emits noisy_count_k records. A record is the bin's
exact mean plus per-record Gaussian noise scaled so that summing the
records of a bin reproduces, in distribution, the privatized sums the
regression path would have drawn directly: the per-record feature noise
variance is noisy_count_k * Delta_k^2 / mu_s^2, divided by the count
when averaging, which leaves Delta_k^2 / mu_s^2 on the bin total.

Records are not clamped to their bin by default; clamping would break
that distributional match. An optional clamp exists for downstream
consumers that require in-domain features.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregation import PreparedBins
from .gdp import RandomSource

__all__ = ["SyntheticDataset", "generate", "aggregate", "write_csv"]


@dataclass(frozen=True)
class SyntheticDataset:
    """Synthetic records with their source-bin index."""

    x: np.ndarray
    y: np.ndarray
    bin_index: np.ndarray
    K: int

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def generate(
    prepared: PreparedBins,
    mu_s: float,
    mu_t: float,
    rng: RandomSource,
    noiseless: bool = False,
    strict_l2: bool = False,
    shuffle: bool = False,
    clamp: bool = False,
) -> SyntheticDataset:
    """Materialize noisy_count_k records per bin from the exact bin sums.

    Spends the same (mu_s, mu_t) budgets as privatizing the sums
    directly; run either this or the regression privatization on a
    given prepared instance, not both, unless you intend to pay twice.

    shuffle permutes the finished records (order stops encoding bins);
    clamp clips features into their bin box afterwards, trading the
    exact aggregate-level noise match for in-domain records.
    """
    for name, v in (("mu_s", mu_s), ("mu_t", mu_t)):
        if not (math.isfinite(float(v)) and float(v) > 0.0):
            raise ValueError(f"{name} must be a finite positive real, got {v}")
    if prepared.intercept:
        raise ValueError("synthesis does not support prepared bins with an intercept column")
    mu_s = float(mu_s)
    mu_t = float(mu_t)

    gen = rng.generator
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    idx: list[np.ndarray] = []
    d = prepared.d
    for k, b in enumerate(prepared.bins):
        m = b.noisy_count
        if strict_l2:
            coord_sd = np.full(d, float(np.linalg.norm(b.sensitivity)) / mu_s)
        else:
            coord_sd = b.sensitivity / mu_s
        # per-record noise has variance m * (per-sum variance); dividing the
        # noised sum by m leaves exactly the per-sum variance on the bin total
        x_sd = math.sqrt(m) * coord_sd
        y_sd = math.sqrt(m) * prepared.label_bound / mu_t
        if noiseless:
            x_noise = np.zeros((m, d))
            y_noise = np.zeros(m)
        else:
            x_noise = gen.normal(0.0, 1.0, size=(m, d)) * x_sd
            y_noise = gen.normal(0.0, 1.0, size=m) * y_sd
        x_k = (b.sum_x + x_noise) / m
        y_k = (b.sum_y + y_noise) / m
        if clamp:
            x_k = np.clip(x_k, np.asarray(b.region.lower), np.asarray(b.region.upper))
        xs.append(x_k)
        ys.append(y_k)
        idx.append(np.full(m, k, dtype=int))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    bin_index = np.concatenate(idx)
    if shuffle:
        order = gen.permutation(x.shape[0])
        x, y, bin_index = x[order], y[order], bin_index[order]
    return SyntheticDataset(x=x, y=y, bin_index=bin_index, K=prepared.K)


def aggregate(dataset: SyntheticDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-bin sums (S, t) and record counts recovered from the records."""
    K = dataset.K
    counts = np.bincount(dataset.bin_index, minlength=K)
    S = np.zeros((K, dataset.d))
    np.add.at(S, dataset.bin_index, dataset.x)
    t = np.zeros(K)
    np.add.at(t, dataset.bin_index, dataset.y)
    return S, t, counts


def write_csv(dataset: SyntheticDataset, path: str | Path, include_bin: bool = True) -> Path:
    """Write records as delimited text: x_1..x_d, y, and optionally bin."""
    path = Path(path)
    header = [f"x_{i + 1}" for i in range(dataset.d)] + ["y"]
    if include_bin:
        header.append("bin")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.x[i]] + [repr(float(dataset.y[i]))]
            if include_bin:
                row.append(str(int(dataset.bin_index[i])))
            writer.writerow(row)
    return path
