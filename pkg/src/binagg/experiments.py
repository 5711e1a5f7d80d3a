"""Simulation experiments: interval coverage, error-vs-n curves, and the
regression/synthesis equivalence study.

Every experiment returns an ExperimentReport holding per-repetition
records and aggregate rows recomputable from them (verified by
``recompute_aggregates``). Repetition r draws from stream r of the base
seed, so results do not depend on execution order, and failed
repetitions are recorded, excluded from aggregates, and counted.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import regression, synthesis
from .aggregation import PreparedBins, prepare
from .errors import BinAggError
from .gdp import RandomSource
from .pipeline import run_fit
from .privtree import build, calibrate
from .simulate import SimulationConfig, relative_l2_error, simulate_dataset

__all__ = [
    "ExperimentReport",
    "coverage_experiment",
    "error_curve_experiment",
    "equivalence_experiment",
    "recompute_aggregates",
    "ks_two_sample",
    "ks_critical_value",
]

_FAILURES = (BinAggError, np.linalg.LinAlgError)


@dataclass
class ExperimentReport:
    """Per-repetition records plus aggregates derived from them.

    ``timings`` (seconds per repetition) stays in memory only; the
    report writers exclude it by default so identical runs serialize to
    identical bytes.
    """

    kind: str
    config: dict
    records: list[dict]
    aggregates: list[dict]
    meta: dict
    timings: list[float] = field(default_factory=list)


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |ECDF_a - ECDF_b|."""
    a = np.sort(np.asarray(a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical_value(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS rejection threshold at level alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    c = math.sqrt(-math.log(alpha / 2.0) / 2.0)
    return c * math.sqrt((n + m) / (n * m))


def _clip_dataset(X, y, cfg: SimulationConfig):
    lows = np.asarray([lo for lo, _ in cfg.feature_bounds])
    ups = np.asarray([up for _, up in cfg.feature_bounds])
    X = np.clip(X, lows, ups)
    y = np.clip(y, cfg.label_bounds[0], cfg.label_bounds[1])
    return X, y


def coverage_experiment(cfg: SimulationConfig) -> ExperimentReport:
    """Repeated fits with fresh truths; per-coordinate interval coverage.

    Each repetition records the estimation error (beta_hat - beta), the
    debiased and naive theoretical SDs, and whether each method's
    interval covered the true coefficient. Because the truth is redrawn
    per repetition, the aggregate "empirical SD" is the SD of the
    estimation error across repetitions, which is the quantity the
    averaged theoretical SD estimates.
    """
    records: list[dict] = []
    timings: list[float] = []
    for rep in range(cfg.repetitions):
        rng = RandomSource(cfg.base_seed, rep)
        started = time.perf_counter()
        X, y, beta_true = simulate_dataset(cfg, rng)
        X, y = _clip_dataset(X, y, cfg)
        record: dict = {"rep": rep, "status": "ok", "error": ""}
        try:
            result = run_fit(
                X, y, cfg.feature_bounds, cfg.label_bounds, cfg.fit, rng,
                naive_sigma2=max(cfg.sigma**2, 1e-12),
            )
        except _FAILURES as exc:
            record["status"] = "failed"
            record["error"] = type(exc).__name__
            for j in range(cfg.d):
                for col in ("bias", "theor_sd", "naive_sd"):
                    record[f"{col}_{j + 1}"] = float("nan")
                record[f"covered_{j + 1}"] = 0
                record[f"naive_covered_{j + 1}"] = 0
            record["K"] = 0
            record["rel_l2_error"] = float("nan")
            records.append(record)
            timings.append(time.perf_counter() - started)
            continue
        fit, naive = result.fit, result.naive
        sd = fit.std_errors()
        nsd = naive.std_errors()
        for j in range(cfg.d):
            record[f"bias_{j + 1}"] = float(fit.beta[j] - beta_true[j])
            record[f"theor_sd_{j + 1}"] = float(sd[j])
            record[f"naive_sd_{j + 1}"] = float(nsd[j])
            record[f"covered_{j + 1}"] = int(
                fit.intervals[j, 0] <= beta_true[j] <= fit.intervals[j, 1]
            )
            record[f"naive_covered_{j + 1}"] = int(
                naive.intervals[j, 0] <= beta_true[j] <= naive.intervals[j, 1]
            )
        record["K"] = result.bins_kept
        record["rel_l2_error"] = relative_l2_error(fit.beta, beta_true)
        records.append(record)
        timings.append(time.perf_counter() - started)

    config = _config_dict(cfg)
    aggregates = _coverage_aggregates(records, cfg.d)
    failed = sum(1 for r in records if r["status"] != "ok")
    meta = {
        "repetitions": cfg.repetitions,
        "failed": failed,
        "failure_rate": failed / cfg.repetitions,
        "composed_mu": cfg.fit.allocation().total(),
    }
    return ExperimentReport("coverage", config, records, aggregates, meta, timings)


def _coverage_aggregates(records: list[dict], d: int) -> list[dict]:
    ok = [r for r in records if r["status"] == "ok"]
    rows = []
    for j in range(1, d + 1):
        bias = np.array([r[f"bias_{j}"] for r in ok])
        rows.append({
            "coordinate": j,
            "avg_bias": float(np.mean(bias)) if ok else float("nan"),
            "empirical_sd": float(np.std(bias, ddof=1)) if len(ok) > 1 else float("nan"),
            "avg_theor_sd": float(np.mean([r[f"theor_sd_{j}"] for r in ok])) if ok else float("nan"),
            "avg_naive_sd": float(np.mean([r[f"naive_sd_{j}"] for r in ok])) if ok else float("nan"),
            "coverage": float(np.mean([r[f"covered_{j}"] for r in ok])) if ok else float("nan"),
            "naive_coverage": float(np.mean([r[f"naive_covered_{j}"] for r in ok])) if ok else float("nan"),
        })
    return rows


def error_curve_experiment(
    cfg: SimulationConfig,
    n_grid: list[int],
    bound_inflation: float = 1.0,
    theta_values: list[float] | None = None,
    ratio_values: list[tuple[float, float, float, float]] | None = None,
) -> ExperimentReport:
    """Mean relative L2 error of the private fit and of exact OLS vs n.

    ``bound_inflation`` multiplies the configured feature and label
    bounds before fitting (the data itself is unchanged), reproducing
    loose-bounds studies. Optional theta and budget-ratio lists sweep
    the split threshold and allocation; each sweep setting runs the
    full n grid.
    """
    if not n_grid or any(int(n) <= cfg.d for n in n_grid):
        raise ValueError(f"n_grid entries must exceed d={cfg.d}, got {n_grid}")
    if not (math.isfinite(bound_inflation) and bound_inflation >= 1.0):
        raise ValueError(f"bound_inflation must be >= 1, got {bound_inflation}")
    thetas = theta_values if theta_values is not None else [cfg.fit.theta]
    ratio_list = ratio_values if ratio_values is not None else [cfg.fit.ratios]

    records: list[dict] = []
    timings: list[float] = []
    stream = 0
    for theta in thetas:
        for ratios in ratio_list:
            fit_cfg = replace(cfg.fit, theta=float(theta), ratios=tuple(ratios))
            for n in n_grid:
                sub = SimulationConfig(
                    n=int(n), d=cfg.d, sigma=cfg.sigma,
                    repetitions=cfg.repetitions, base_seed=cfg.base_seed,
                    feature_bounds=list(cfg.feature_bounds),
                    label_bounds=cfg.label_bounds, fit=fit_cfg,
                )
                fit_bounds = [
                    (lo * bound_inflation, up * bound_inflation)
                    for lo, up in sub.feature_bounds
                ]
                fit_label = (
                    sub.label_bounds[0] * bound_inflation,
                    sub.label_bounds[1] * bound_inflation,
                )
                for rep in range(sub.repetitions):
                    rng = RandomSource(cfg.base_seed, stream)
                    stream += 1
                    started = time.perf_counter()
                    X, y, beta_true = simulate_dataset(sub, rng)
                    X, y = _clip_dataset(X, y, sub)
                    record = {
                        "theta": float(theta),
                        "ratios": ":".join(repr(float(r)) for r in ratios),
                        "n": int(n),
                        "rep": rep,
                        "status": "ok",
                        "error": "",
                    }
                    try:
                        result = run_fit(X, y, fit_bounds, fit_label, fit_cfg, rng)
                        ols = regression.ols_exact(X, y)
                        record["rel_l2_private"] = relative_l2_error(result.fit.beta, beta_true)
                        record["rel_l2_ols"] = relative_l2_error(ols, beta_true)
                        record["K"] = result.bins_kept
                    except _FAILURES as exc:
                        record["status"] = "failed"
                        record["error"] = type(exc).__name__
                        record["rel_l2_private"] = float("nan")
                        record["rel_l2_ols"] = float("nan")
                        record["K"] = 0
                    records.append(record)
                    timings.append(time.perf_counter() - started)

    config = _config_dict(cfg)
    config["n_grid"] = [int(n) for n in n_grid]
    config["bound_inflation"] = float(bound_inflation)
    config["theta_values"] = [float(t) for t in thetas]
    config["ratio_values"] = [":".join(repr(float(r)) for r in rs) for rs in ratio_list]
    aggregates = _error_curve_aggregates(records)
    failed = sum(1 for r in records if r["status"] != "ok")
    meta = {
        "repetitions": len(records),
        "failed": failed,
        "failure_rate": failed / len(records),
        "composed_mu": cfg.fit.allocation().total(),
    }
    return ExperimentReport("error_curve", config, records, aggregates, meta, timings)


def _error_curve_aggregates(records: list[dict]) -> list[dict]:
    keys = sorted({(r["theta"], r["ratios"], r["n"]) for r in records}, key=lambda k: (k[0], k[1], k[2]))
    rows = []
    for theta, ratios, n in keys:
        group = [r for r in records if (r["theta"], r["ratios"], r["n"]) == (theta, ratios, n)]
        ok = [r for r in group if r["status"] == "ok"]
        rows.append({
            "theta": theta,
            "ratios": ratios,
            "n": n,
            "mean_rel_l2_private": float(np.mean([r["rel_l2_private"] for r in ok])) if ok else float("nan"),
            "mean_rel_l2_ols": float(np.mean([r["rel_l2_ols"] for r in ok])) if ok else float("nan"),
            "failed": len(group) - len(ok),
        })
    return rows


def _fixture_prepared(cfg: SimulationConfig) -> PreparedBins:
    # deterministic fixture: data on stream 0, tree on stream 1, counts on stream 2
    X, y, _ = simulate_dataset(cfg, RandomSource(cfg.base_seed, 0))
    X, y = _clip_dataset(X, y, cfg)
    alloc = cfg.fit.allocation()
    tree_cfg = calibrate(alloc.mu_bin, theta=cfg.fit.theta, max_depth=cfg.fit.max_depth)
    from .pipeline import domain_from_bounds, label_bound_from_bounds

    bins = build(X, domain_from_bounds(cfg.feature_bounds), tree_cfg, RandomSource(cfg.base_seed, 1))
    return prepare(
        X, y, bins, alloc.mu_c, label_bound_from_bounds(cfg.label_bounds),
        RandomSource(cfg.base_seed, 2), min_count=cfg.fit.min_count,
    )


def equivalence_experiment(cfg: SimulationConfig, n_seeds: int = 5000) -> ExperimentReport:
    """Synthetic-data aggregates vs directly privatized sums, seed by seed.

    On one fixed prepared-bins fixture, each seed generates a synthetic
    dataset, re-aggregates it, and independently privatizes the same
    sums directly. Aggregate rows compare per-bin, per-coordinate means
    and variances against their targets and report the two-sample KS
    statistic between the matched moment samples.
    """
    if n_seeds < 100:
        raise ValueError(f"n_seeds must be >= 100, got {n_seeds}")
    prepared = _fixture_prepared(cfg)
    alloc = cfg.fit.allocation()
    K, d = prepared.K, prepared.d

    records: list[dict] = []
    timings: list[float] = []
    synth_base, direct_base = 10, 10 + n_seeds  # disjoint stream ranges
    for i in range(n_seeds):
        started = time.perf_counter()
        ds = synthesis.generate(
            prepared, alloc.mu_s, alloc.mu_t, RandomSource(cfg.base_seed, synth_base + i),
        )
        S_syn, t_syn, _ = synthesis.aggregate(ds)
        priv = regression.privatize(
            prepared, alloc.mu_s, alloc.mu_t, RandomSource(cfg.base_seed, direct_base + i),
        )
        record: dict = {"seed_index": i, "status": "ok", "error": ""}
        for k in range(K):
            for j in range(d):
                record[f"synth_s{k + 1}_{j + 1}"] = float(S_syn[k, j])
                record[f"direct_s{k + 1}_{j + 1}"] = float(priv.S[k, j])
            record[f"synth_t{k + 1}"] = float(t_syn[k])
            record[f"direct_t{k + 1}"] = float(priv.t[k])
        records.append(record)
        timings.append(time.perf_counter() - started)

    config = _config_dict(cfg)
    config["n_seeds"] = int(n_seeds)
    targets = _equivalence_targets(prepared, alloc)
    aggregates = _equivalence_aggregates(records, targets)
    meta = {
        "repetitions": n_seeds,
        "failed": 0,
        "failure_rate": 0.0,
        "composed_mu": alloc.total(),
        "K": K,
        "d": d,
        "all_ok": all(
            bool(row["mean_ok"]) and bool(row["var_ok"]) and bool(row["ks_ok"])
            for row in aggregates
        ),
    }
    return ExperimentReport("equivalence", config, records, aggregates, meta, timings)


def _equivalence_targets(prepared: PreparedBins, alloc) -> list[dict]:
    rows = []
    for k, b in enumerate(prepared.bins):
        for j in range(prepared.d):
            rows.append({
                "moment": f"s{k + 1}_{j + 1}",
                "target_mean": float(b.sum_x[j]),
                "target_var": float((b.sensitivity[j] / alloc.mu_s) ** 2),
            })
        rows.append({
            "moment": f"t{k + 1}",
            "target_mean": float(b.sum_y),
            "target_var": float((prepared.label_bound / alloc.mu_t) ** 2),
        })
    return rows


def _equivalence_aggregates(records: list[dict], targets: list[dict]) -> list[dict]:
    n = len(records)
    rows = []
    for target in targets:
        moment = target["moment"]
        syn = np.array([r[f"synth_{moment}"] for r in records])
        direct = np.array([r[f"direct_{moment}"] for r in records])
        t_mean, t_var = target["target_mean"], target["target_var"]
        se = math.sqrt(t_var / n)
        var_syn = float(np.var(syn, ddof=1))
        ks = ks_two_sample(syn, direct)
        crit = ks_critical_value(n, n, alpha=0.01)
        rows.append({
            "moment": moment,
            "target_mean": t_mean,
            "target_var": t_var,
            "mean_synth": float(np.mean(syn)),
            "mean_direct": float(np.mean(direct)),
            "var_synth": var_syn,
            "var_direct": float(np.var(direct, ddof=1)),
            "ks_stat": ks,
            "ks_critical": crit,
            "mean_ok": int(abs(float(np.mean(syn)) - t_mean) <= 4.0 * se),
            "var_ok": int(abs(var_syn - t_var) <= 0.05 * t_var),
            "ks_ok": int(ks < crit),
        })
    return rows


def _config_dict(cfg: SimulationConfig) -> dict:
    return {
        "n": cfg.n,
        "d": cfg.d,
        "sigma": cfg.sigma,
        "repetitions": cfg.repetitions,
        "base_seed": cfg.base_seed,
        "feature_bounds": [[float(lo), float(up)] for lo, up in cfg.feature_bounds],
        "label_bounds": [float(cfg.label_bounds[0]), float(cfg.label_bounds[1])],
        "total_mu": cfg.fit.total_mu,
        "ratios": list(cfg.fit.ratios),
        "theta": cfg.fit.theta,
        "max_depth": cfg.fit.max_depth,
        "min_count": cfg.fit.min_count,
        "alpha": cfg.fit.alpha,
        "strict_l2_mode": cfg.fit.strict_l2,
        "algorithm2_literal_debias": cfg.fit.literal_debias,
        "intercept": cfg.fit.intercept,
        "no_noise": cfg.fit.no_noise,
    }


def recompute_aggregates(report: ExperimentReport) -> list[dict]:
    """Re-derive the aggregate rows from the stored records.

    Used to verify that a loaded report is self-consistent.
    """
    if report.kind == "coverage":
        return _coverage_aggregates(report.records, report.config["d"])
    if report.kind == "error_curve":
        return _error_curve_aggregates(report.records)
    if report.kind == "equivalence":
        targets = [
            {
                "moment": row["moment"],
                "target_mean": row["target_mean"],
                "target_var": row["target_var"],
            }
            for row in report.aggregates
        ]
        return _equivalence_aggregates(report.records, targets)
    raise ValueError(f"unknown report kind {report.kind!r}")
