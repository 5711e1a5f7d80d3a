"""Report serialization: delimited text and JSON, byte-stable.

Numbers are written with repr (shortest round-trip form) and no
timestamps are embedded, so two runs with the same config and seed
produce identical files. Loading re-derives the aggregates from the
stored records and rejects reports where they disagree.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .experiments import ExperimentReport, recompute_aggregates
from .pipeline import FitResult

__all__ = [
    "write_experiment_report",
    "load_experiment_report",
    "verify_report",
    "fit_report_rows",
    "write_fit_report",
    "format_fit_text",
]


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        if list(row.keys()) != header:
            raise ValueError("all rows must share one column set")
        writer.writerow([_cell(row[k]) for k in header])
    return buf.getvalue()


def write_experiment_report(
    report: ExperimentReport,
    out_dir: str | Path,
    basename: str,
    include_timing: bool = False,
) -> dict[str, Path]:
    """Write {basename}_records.csv, {basename}_aggregates.csv, {basename}.json.

    ``include_timing`` adds a wall-time column to the records CSV; the
    timings differ run to run, so switching it on gives up byte-level
    reproducibility of that file.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = report.records
    if include_timing and report.timings:
        records = [
            {**r, "wall_time_s": float(t)} for r, t in zip(report.records, report.timings)
        ]
    paths = {
        "records": out_dir / f"{basename}_records.csv",
        "aggregates": out_dir / f"{basename}_aggregates.csv",
        "json": out_dir / f"{basename}.json",
    }
    paths["records"].write_text(_rows_to_csv(records))
    paths["aggregates"].write_text(_rows_to_csv(report.aggregates))
    payload = {
        "kind": report.kind,
        "config": report.config,
        "meta": report.meta,
        "aggregates": report.aggregates,
        "records": report.records,
    }
    paths["json"].write_text(json.dumps(payload, indent=2) + "\n")
    return paths


def load_experiment_report(path: str | Path) -> ExperimentReport:
    """Load a JSON report and verify aggregate/record consistency."""
    payload = json.loads(Path(path).read_text())
    report = ExperimentReport(
        kind=payload["kind"],
        config=payload["config"],
        records=payload["records"],
        aggregates=payload["aggregates"],
        meta=payload["meta"],
    )
    verify_report(report)
    return report


def _close(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        fa, fb = float(a), float(b)
        if math.isnan(fa) and math.isnan(fb):
            return True
        return math.isclose(fa, fb, rel_tol=1e-12, abs_tol=1e-12)
    return a == b


def verify_report(report: ExperimentReport) -> None:
    """Raise ValueError unless the stored aggregates match the records."""
    expected = recompute_aggregates(report)
    if len(expected) != len(report.aggregates):
        raise ValueError(
            f"report has {len(report.aggregates)} aggregate rows, "
            f"records imply {len(expected)}"
        )
    for i, (got, want) in enumerate(zip(report.aggregates, expected)):
        if set(got) != set(want):
            raise ValueError(f"aggregate row {i} has columns {set(got)} vs {set(want)}")
        for key in want:
            if not _close(got[key], want[key]):
                raise ValueError(
                    f"aggregate row {i}, column {key!r}: stored {got[key]!r} "
                    f"but records imply {want[key]!r}"
                )


def fit_report_rows(result: FitResult, seed: int, extra: dict | None = None) -> list[dict]:
    """Flat key/value rows describing one fit."""
    rows: list[dict] = []

    def put(key, value):
        rows.append({"key": key, "value": value})

    alloc = result.allocation
    put("n", result.n)
    put("d", result.d)
    put("bins_released", result.bins_released)
    put("K", result.bins_kept)
    put("seed", seed)
    put("alpha", result.fit.alpha)
    put("mu_bin", alloc.mu_bin)
    put("mu_count", alloc.mu_c)
    put("mu_feature_sums", alloc.mu_s)
    put("mu_label_sums", alloc.mu_t)
    put("mu_total", alloc.total())
    se = result.fit.std_errors()
    for j in range(result.d):
        put(f"beta_{j + 1}", float(result.fit.beta[j]))
        put(f"se_{j + 1}", float(se[j]))
        put(f"ci_low_{j + 1}", float(result.fit.intervals[j, 0]))
        put(f"ci_high_{j + 1}", float(result.fit.intervals[j, 1]))
    for key, value in (extra or {}).items():
        put(key, value)
    return rows


def write_fit_report(
    result: FitResult,
    out_dir: str | Path,
    basename: str,
    seed: int,
    extra: dict | None = None,
) -> dict[str, Path]:
    """Write a fit as {basename}.csv (key,value) and {basename}.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = fit_report_rows(result, seed, extra)
    paths = {
        "csv": out_dir / f"{basename}.csv",
        "json": out_dir / f"{basename}.json",
    }
    paths["csv"].write_text(_rows_to_csv(rows))
    paths["json"].write_text(
        json.dumps({row["key"]: row["value"] for row in rows}, indent=2) + "\n"
    )
    return paths


def format_fit_text(result: FitResult, seed: int, extra: dict | None = None) -> str:
    """Human-readable fit summary for standard output."""
    alloc = result.allocation
    lines = [
        f"n={result.n} d={result.d} bins_released={result.bins_released} K={result.bins_kept} seed={seed}",
        (
            f"budgets: mu_bin={alloc.mu_bin:.6g} mu_count={alloc.mu_c:.6g} "
            f"mu_sums={alloc.mu_s:.6g} mu_labels={alloc.mu_t:.6g} "
            f"total={alloc.total():.6g}"
        ),
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {value}")
    se = result.fit.std_errors()
    level = 100.0 * (1.0 - result.fit.alpha)
    lines.append(f"coefficient  estimate      std.err       {level:.4g}% interval")
    for j in range(result.d):
        lines.append(
            f"beta_{j + 1:<7d} {result.fit.beta[j]: .6e} {se[j]:.6e} "
            f"[{result.fit.intervals[j, 0]: .6e}, {result.fit.intervals[j, 1]: .6e}]"
        )
    return "\n".join(lines)
