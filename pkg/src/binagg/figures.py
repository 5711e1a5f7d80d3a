"""Matplotlib renderings of experiment reports and fit summaries.

Figures are written next to the delimited reports. The Agg backend is
forced so rendering works headless, and no timestamps are embedded.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .experiments import ExperimentReport  # noqa: E402
from .pipeline import FitResult  # noqa: E402

__all__ = ["render_experiment_figures", "render_fit_figure"]

_META = {"Software": "binagg"}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)
    return path


def render_experiment_figures(
    report: ExperimentReport, out_dir: str | Path, basename: str
) -> list[Path]:
    """Render the figures appropriate to the report kind; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if report.kind == "coverage":
        return [_coverage_figure(report, out_dir / f"{basename}_coverage.png")]
    if report.kind == "error_curve":
        return [_error_curve_figure(report, out_dir / f"{basename}_error_curve.png")]
    if report.kind == "equivalence":
        return [_equivalence_figure(report, out_dir / f"{basename}_equivalence.png")]
    raise ValueError(f"unknown report kind {report.kind!r}")


def _coverage_figure(report: ExperimentReport, path: Path) -> Path:
    agg = report.aggregates
    coords = [row["coordinate"] for row in agg]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(coords, [row["coverage"] for row in agg], "o-", label="debiased")
    ax1.plot(coords, [row["naive_coverage"] for row in agg], "s--", label="naive")
    ax1.axhline(1.0 - report.config["alpha"], color="gray", lw=0.8, label="nominal")
    ax1.set_xlabel("coordinate")
    ax1.set_ylabel("coverage")
    ax1.set_ylim(0.0, 1.05)
    ax1.legend(fontsize=8)
    ax2.plot(coords, [row["empirical_sd"] for row in agg], "o-", label="empirical SD")
    ax2.plot(coords, [row["avg_theor_sd"] for row in agg], "s--", label="avg theoretical SD")
    ax2.plot(coords, [row["avg_naive_sd"] for row in agg], "^:", label="avg naive SD")
    ax2.set_xlabel("coordinate")
    ax2.set_ylabel("standard deviation")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def _error_curve_figure(report: ExperimentReport, path: Path) -> Path:
    agg = report.aggregates
    settings = sorted({(row["theta"], row["ratios"]) for row in agg})
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    for theta, ratios in settings:
        rows = [r for r in agg if (r["theta"], r["ratios"]) == (theta, ratios)]
        rows.sort(key=lambda r: r["n"])
        ns = [r["n"] for r in rows]
        label = "private" if len(settings) == 1 else f"private theta={theta} ratios={ratios}"
        ax.plot(ns, [r["mean_rel_l2_private"] for r in rows], "o-", label=label)
    base = sorted({r["n"]: r["mean_rel_l2_ols"] for r in agg}.items())
    ax.plot([n for n, _ in base], [v for _, v in base], "k--", label="OLS (non-private)")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("mean relative L2 error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def _equivalence_figure(report: ExperimentReport, path: Path) -> Path:
    agg = report.aggregates
    fig, ax = plt.subplots(figsize=(max(5.2, 0.25 * len(agg)), 3.8))
    xs = range(len(agg))
    ax.bar(xs, [row["ks_stat"] for row in agg], label="KS statistic")
    ax.axhline(agg[0]["ks_critical"], color="red", lw=0.8, label="1% critical value")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([row["moment"] for row in agg], rotation=90, fontsize=6)
    ax.set_ylabel("KS statistic")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_fit_figure(result: FitResult, out_dir: str | Path, basename: str) -> Path:
    """Coefficient estimates with their confidence intervals."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.2, 0.6 + 0.45 * result.d))
    ys = range(result.d, 0, -1)
    for j, yc in enumerate(ys):
        lo, hi = result.fit.intervals[j]
        ax.plot([lo, hi], [yc, yc], "-", color="tab:blue")
        ax.plot([result.fit.beta[j]], [yc], "o", color="tab:blue")
    ax.set_yticks(list(ys))
    ax.set_yticklabels([f"beta_{j + 1}" for j in range(result.d)])
    ax.set_xlabel("estimate")
    fig.tight_layout()
    return _save(fig, out_dir / f"{basename}_coefficients.png")
