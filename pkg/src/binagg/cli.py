"""Command-line interface.

Subcommands: fit, synth, simulate, coverage, equivalence,
convert-budget. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure. The default seed comes from BINAGG_SEED when set;
--seed always wins.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import parse_config_file
from .datasets import DatasetSpec, load_dataset
from .errors import DataLoadError, EmptyResultError, InsufficientBinsError, SingularSystemError
from .experiments import (
    coverage_experiment,
    equivalence_experiment,
    error_curve_experiment,
)
from .figures import render_experiment_figures, render_fit_figure
from .gdp import RandomSource, epsilon_for_delta, gdp_to_approx_dp, gdp_to_pure_dp, pure_dp_to_gdp
from .pipeline import FitConfig, run_fit, run_synthesis
from .reporting import format_fit_text, write_experiment_report, write_fit_report
from .simulate import SimulationConfig
from .synthesis import write_csv

SEED_ENV_VAR = "BINAGG_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage problems; this CLI reserves
    # 2 for data errors, so route them through UsageError instead
    def error(self, message):
        raise UsageError(message)


def _parse_ratios(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(":") if p.strip())


def _parse_bounds(text: str) -> list[tuple[float, float]]:
    out = []
    for group in text.split(";"):
        if not group.strip():
            continue
        parts = [p for p in group.split(",") if p.strip()]
        if len(parts) != 2:
            raise UsageError(f"bounds group {group!r} is not 'low,high'")
        out.append((float(parts[0]), float(parts[1])))
    return out


def _parse_pair(text: str) -> tuple[float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise UsageError(f"expected 'low,high', got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _add_pipeline_options(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="base seed (overrides config and env)")
    parser.add_argument("--mu", type=float, default=None, help="total GDP budget")
    parser.add_argument("--ratios", default=None, help="budget ratios, e.g. 1:3:3:3")
    parser.add_argument("--theta", type=float, default=None, help="split threshold")
    parser.add_argument("--max-depth", type=int, default=None, help="partition depth cap")
    parser.add_argument("--min-count", type=int, default=None, help="noisy-count floor for keeping a bin")
    parser.add_argument("--alpha", type=float, default=None, help="interval miscoverage level")
    parser.add_argument("--strict-l2", action="store_true", help="L2-norm noise calibration per bin")
    parser.add_argument("--literal-debias", action="store_true",
                        help="divide the bias correction by K (compatibility)")
    parser.add_argument("--intercept", action="store_true", help="append a constant column")
    parser.add_argument("--no-noise", action="store_true",
                        help="disable all noise (debug only, NOT private)")


def _add_data_options(parser: argparse.ArgumentParser):
    parser.add_argument("--data", required=True, help="CSV file with a header row")
    parser.add_argument("--label-col", default="y", help="label column name (default y)")
    parser.add_argument("--bounds", default=None,
                        help="per-feature bounds, e.g. 0,1;0,1 (required here or in config)")
    parser.add_argument("--label-bounds", default=None, help="label bounds, e.g. 0,7")
    parser.add_argument("--clip-policy", choices=("clip", "reject"), default="clip")


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        return parse_config_file(args.config)
    return {}


def _resolve_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV_VAR}={env!r} is not an integer") from None
    return 0


def _fit_config(args, cfg: dict) -> FitConfig:
    def pick(arg_value, key, default):
        if arg_value is not None:
            return arg_value
        return cfg.get(key, default)

    base = FitConfig()
    ratios = pick(args.ratios, "ratios", base.ratios)
    if isinstance(ratios, str):
        ratios = _parse_ratios(ratios)
    return FitConfig(
        total_mu=float(pick(args.mu, "total_mu", base.total_mu)),
        ratios=tuple(ratios),
        theta=float(pick(args.theta, "theta", base.theta)),
        max_depth=int(pick(args.max_depth, "max_depth", base.max_depth)),
        min_count=int(pick(args.min_count, "min_count", base.min_count)),
        alpha=float(pick(args.alpha, "alpha", base.alpha)),
        strict_l2=bool(args.strict_l2 or cfg.get("strict_l2_mode", False)),
        literal_debias=bool(args.literal_debias or cfg.get("algorithm2_literal_debias", False)),
        intercept=bool(args.intercept or cfg.get("intercept", False)),
        no_noise=bool(args.no_noise),
    )


def _dataset_spec(args, cfg: dict) -> DatasetSpec:
    bounds = args.bounds if args.bounds is not None else cfg.get("bounds")
    if bounds is None:
        raise UsageError("feature bounds are required (--bounds or config key 'bounds')")
    if isinstance(bounds, str):
        bounds = _parse_bounds(bounds)
    label_bounds = args.label_bounds if args.label_bounds is not None else cfg.get("label_bounds")
    if label_bounds is None:
        raise UsageError("label bounds are required (--label-bounds or config key 'label_bounds')")
    if isinstance(label_bounds, str):
        label_bounds = _parse_pair(label_bounds)
    label_col = args.label_col if args.label_col != "y" else cfg.get("label_column", args.label_col)
    policy = args.clip_policy if args.clip_policy != "clip" else cfg.get("clip_policy", args.clip_policy)
    return DatasetSpec(
        path=args.data,
        label_column=label_col,
        feature_bounds=list(bounds),
        label_bounds=tuple(label_bounds),
        clip_policy=policy,
    )


def _cmd_fit(args) -> int:
    cfg = _load_config(args)
    fit_cfg = _fit_config(args, cfg)
    spec = _dataset_spec(args, cfg)
    seed = _resolve_seed(args, cfg)
    loaded = load_dataset(spec)
    rng = RandomSource(seed, 0)
    result = run_fit(
        loaded.X, loaded.y, spec.feature_bounds, spec.label_bounds, fit_cfg, rng
    )
    delta = 1.0 / result.n**1.1
    extra = {
        "clipped_rows": loaded.clipped_rows,
        "rejected_rows": loaded.rejected_rows,
        "delta": delta,
        "epsilon": epsilon_for_delta(fit_cfg.total_mu, delta),
    }
    if fit_cfg.no_noise:
        print("WARNING: --no-noise run, output is NOT differentially private")
    print(format_fit_text(result, seed, extra))
    if args.out:
        paths = write_fit_report(result, args.out, args.basename, seed, extra)
        written = list(paths.values())
        if not args.no_figures:
            written.append(render_fit_figure(result, args.out, args.basename))
        for path in written:
            print(f"wrote {path}")
    return 0


def _cmd_synth(args) -> int:
    cfg = _load_config(args)
    fit_cfg = _fit_config(args, cfg)
    spec = _dataset_spec(args, cfg)
    seed = _resolve_seed(args, cfg)
    loaded = load_dataset(spec)
    rng = RandomSource(seed, 0)
    result = run_synthesis(
        loaded.X, loaded.y, spec.feature_bounds, spec.label_bounds, fit_cfg, rng,
        shuffle=args.shuffle, clamp=args.clamp,
    )
    if fit_cfg.no_noise:
        print("WARNING: --no-noise run, output is NOT differentially private")
    path = write_csv(result.dataset, args.out, include_bin=not args.strip_bin)
    alloc = result.allocation
    print(
        f"synthesized {result.dataset.n} records from {result.bins_kept} bins "
        f"({result.bins_released} released) seed={seed} mu_total={alloc.total():.6g}"
    )
    print(f"wrote {path}")
    return 0


def _simulation_config(args, cfg: dict, fit_cfg: FitConfig) -> SimulationConfig:
    def pick(name, key, default):
        value = getattr(args, name, None)
        if value is not None:
            return value
        return cfg.get(key, default)

    bounds = pick("bounds", "bounds", None)
    if isinstance(bounds, str):
        bounds = _parse_bounds(bounds)
    label_bounds = pick("label_bounds", "label_bounds", None)
    if isinstance(label_bounds, str):
        label_bounds = _parse_pair(label_bounds)
    return SimulationConfig(
        n=int(pick("n", "n", 1000)),
        d=int(pick("d", "d", 5)),
        sigma=float(pick("sigma", "sigma", 1.0)),
        repetitions=int(pick("reps", "reps", 100)),
        base_seed=_resolve_seed(args, cfg),
        feature_bounds=bounds,
        label_bounds=tuple(label_bounds) if label_bounds is not None else None,
        fit=fit_cfg,
    )


def _write_experiment(args, report) -> int:
    print(f"{report.kind}: {report.meta['repetitions']} repetitions, "
          f"{report.meta['failed']} failed (rate {report.meta['failure_rate']:.4g}), "
          f"composed mu {report.meta['composed_mu']:.6g}")
    for row in report.aggregates:
        print("  " + " ".join(f"{k}={v}" for k, v in row.items()))
    if args.out:
        paths = write_experiment_report(report, args.out, report.kind, include_timing=args.timing)
        written = list(paths.values())
        if not args.no_figures:
            written.extend(render_experiment_figures(report, args.out, report.kind))
        for path in written:
            print(f"wrote {path}")
    return 0


def _run_simulate(args, kind: str) -> int:
    cfg = _load_config(args)
    fit_cfg = _fit_config(args, cfg)
    sim_cfg = _simulation_config(args, cfg, fit_cfg)
    if kind == "coverage":
        report = coverage_experiment(sim_cfg)
    elif kind == "error-curve":
        n_grid = args.n_grid if args.n_grid is not None else cfg.get("n_grid")
        if n_grid is None:
            raise UsageError("--n-grid is required for the error-curve report")
        if isinstance(n_grid, str):
            n_grid = _parse_int_list(n_grid)
        thetas = _sweep_floats(args.sweep_theta)
        ratio_values = _sweep_ratios(args.sweep_ratios)
        inflation = args.bound_inflation if args.bound_inflation is not None \
            else cfg.get("bound_inflation", 1.0)
        report = error_curve_experiment(
            sim_cfg, n_grid, bound_inflation=float(inflation),
            theta_values=thetas, ratio_values=ratio_values,
        )
    elif kind == "equivalence":
        seeds = args.seeds if args.seeds is not None else cfg.get("seeds", 5000)
        report = equivalence_experiment(sim_cfg, n_seeds=int(seeds))
    else:
        raise UsageError(f"unknown report kind {kind!r}")
    return _write_experiment(args, report)


def _sweep_floats(text):
    if not text:
        return None
    return [float(p) for p in text.split(",") if p.strip()]


def _sweep_ratios(text):
    if not text:
        return None
    return [_parse_ratios(group) for group in text.split(";") if group.strip()]


def _cmd_simulate(args) -> int:
    return _run_simulate(args, args.report)


def _cmd_coverage(args) -> int:
    return _run_simulate(args, "coverage")


def _cmd_equivalence(args) -> int:
    return _run_simulate(args, "equivalence")


def _cmd_convert_budget(args) -> int:
    if args.mu is not None and args.epsilon is not None:
        params = gdp_to_approx_dp(args.mu, args.epsilon)
        print(f"delta = {params.delta!r}")
    elif args.mu is not None and args.delta is not None:
        print(f"epsilon = {epsilon_for_delta(args.mu, args.delta)!r}")
    elif args.epsilon is not None:
        print(f"mu = {pure_dp_to_gdp(args.epsilon)!r}")
    elif args.mu is not None:
        print(f"epsilon = {gdp_to_pure_dp(args.mu)!r} (pure DP)")
    else:
        raise UsageError("convert-budget needs --mu and/or --epsilon, or --mu with --delta")
    return 0


def _add_experiment_options(parser, with_report: bool):
    _add_pipeline_options(parser)
    parser.add_argument("--n", type=int, default=None, help="rows per repetition")
    parser.add_argument("--d", type=int, default=None, help="number of features")
    parser.add_argument("--sigma", type=float, default=None, help="label noise SD")
    parser.add_argument("--reps", type=int, default=None, help="number of repetitions")
    parser.add_argument("--bounds", default=None, help="per-feature bounds (default unit cube)")
    parser.add_argument("--label-bounds", default=None, help="label clip bounds (default by d)")
    parser.add_argument("--out", default=None, help="directory for report files")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    parser.add_argument("--timing", action="store_true",
                        help="add wall-time column (breaks byte-identical reports)")
    if with_report:
        parser.add_argument("--report", choices=("coverage", "error-curve", "equivalence"),
                            default="coverage")
        parser.add_argument("--n-grid", default=None, help="comma list of n for error-curve")
        parser.add_argument("--bound-inflation", type=float, default=None,
                            help="multiply bounds before fitting (error-curve)")
        parser.add_argument("--sweep-theta", default=None, help="comma list of theta values")
        parser.add_argument("--sweep-ratios", default=None,
                            help="semicolon list of ratio specs, e.g. 1:3:3:3;2:3:3:3")
        parser.add_argument("--seeds", type=int, default=None, help="seed count for equivalence")
    else:
        parser.add_argument("--seeds", type=int, default=None, help="seed count (equivalence)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="binagg",
                     description="Differentially private linear regression via binned aggregation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[], help="fit the private estimator on a CSV dataset")
    _add_pipeline_options(p)
    _add_data_options(p)
    p.add_argument("--out", default=None, help="directory for the fit report")
    p.add_argument("--basename", default="fit", help="report file basename")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("synth", help="generate a private synthetic dataset from a CSV dataset")
    _add_pipeline_options(p)
    _add_data_options(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--strip-bin", action="store_true", help="omit the bin column")
    p.add_argument("--shuffle", action="store_true", help="shuffle record order")
    p.add_argument("--clamp", action="store_true",
                   help="clip features into their bin (breaks aggregate equivalence)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("simulate", help="run a simulation study and write reports")
    _add_experiment_options(p, with_report=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("coverage", help="interval-coverage study (simulate --report coverage)")
    _add_experiment_options(p, with_report=False)
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("equivalence", help="synthesis-vs-direct equivalence study")
    _add_experiment_options(p, with_report=False)
    p.set_defaults(func=_cmd_equivalence)

    p = sub.add_parser("convert-budget", help="convert between GDP and (epsilon, delta)")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=_cmd_convert_budget)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataLoadError, EmptyResultError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (SingularSystemError, InsufficientBinsError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
