"""CSV dataset loading with bound enforcement.

Files are delimited text with a header row. One column is the label;
every other column is a feature, in header order. Rows violating the
declared bounds are either clipped into them or rejected, per policy,
and the counts of affected rows are reported back.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataLoadError

__all__ = ["DatasetSpec", "LoadedDataset", "load_dataset"]


@dataclass(frozen=True)
class DatasetSpec:
    """Where a dataset lives and how to interpret it."""

    path: str | Path
    label_column: str
    feature_bounds: list[tuple[float, float]]
    label_bounds: tuple[float, float]
    clip_policy: str = "clip"  # "clip" or "reject"


@dataclass(frozen=True)
class LoadedDataset:
    """Parsed arrays plus what bound enforcement did to the rows."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    clipped_rows: int
    rejected_rows: int


def _check_bounds(bounds, what: str):
    for i, (lo, up) in enumerate(bounds):
        lo, up = float(lo), float(up)
        if not (math.isfinite(lo) and math.isfinite(up) and lo < up):
            raise ValueError(f"{what} {i}: need finite lower < upper, got ({lo}, {up})")


def load_dataset(spec: DatasetSpec) -> LoadedDataset:
    """Read, validate, and bound-enforce a delimited dataset.

    Raises DataLoadError with row/column context on malformed input,
    and ValueError on a bad spec (unknown policy, bad bounds, bounds
    count not matching the feature columns).
    """
    if spec.clip_policy not in ("clip", "reject"):
        raise ValueError(f"clip_policy must be 'clip' or 'reject', got {spec.clip_policy!r}")
    _check_bounds(spec.feature_bounds, "feature bound")
    _check_bounds([spec.label_bounds], "label bound")
    path = Path(spec.path)
    if not path.exists():
        raise DataLoadError(f"no such file: {path}")

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataLoadError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if spec.label_column not in header:
            raise DataLoadError(f"label column not in header {header}", column=spec.label_column)
        label_idx = header.index(spec.label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        if not feature_names:
            raise DataLoadError(f"{path} has no feature columns besides the label")
        if len(spec.feature_bounds) != len(feature_names):
            raise ValueError(
                f"{len(spec.feature_bounds)} feature bounds for "
                f"{len(feature_names)} feature columns {feature_names}"
            )

        rows: list[list[float]] = []
        labels: list[float] = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(header):
                raise DataLoadError(
                    f"expected {len(header)} cells, found {len(raw)}", row=lineno
                )
            parsed = []
            for cell, name in zip(raw, header):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataLoadError(
                        f"cell {cell!r} is not numeric", row=lineno, column=name
                    ) from None
                if not math.isfinite(value):
                    raise DataLoadError(
                        f"cell {cell!r} is not finite", row=lineno, column=name
                    )
                parsed.append(value)
            labels.append(parsed.pop(label_idx))
            rows.append(parsed)

    if not rows:
        raise DataLoadError(f"{path} contains a header but no data rows")
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=float)

    lows = np.asarray([lo for lo, _ in spec.feature_bounds])
    ups = np.asarray([up for _, up in spec.feature_bounds])
    y_lo, y_up = float(spec.label_bounds[0]), float(spec.label_bounds[1])
    out_x = (X < lows) | (X > ups)
    out_y = (y < y_lo) | (y > y_up)
    if spec.clip_policy == "clip":
        touched = int((out_x.any(axis=1) | out_y).sum())
        X = np.clip(X, lows, ups)
        y = np.clip(y, y_lo, y_up)
        return LoadedDataset(X, y, feature_names, clipped_rows=touched, rejected_rows=0)
    keep = ~(out_x.any(axis=1) | out_y)
    rejected = int((~keep).sum())
    if not keep.any():
        raise DataLoadError(f"{path}: every row violates the declared bounds")
    return LoadedDataset(X[keep], y[keep], feature_names, clipped_rows=0, rejected_rows=rejected)
