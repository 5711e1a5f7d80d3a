"""Flat key = value configuration files.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Values use plain text forms: ratios as ``1:3:3:3``, per-feature bounds
as ``0,1;0,1``, a single bound pair as ``0,7``, booleans as
true/false/1/0/yes/no. Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path

__all__ = ["parse_config_file", "CONFIG_KEYS"]


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_ratios(text: str) -> tuple[float, ...]:
    parts = [p for p in text.split(":") if p.strip()]
    return tuple(float(p) for p in parts)


def _parse_pair(text: str) -> tuple[float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected 'low,high', got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_bounds(text: str) -> list[tuple[float, float]]:
    groups = [g for g in text.split(";") if g.strip()]
    return [_parse_pair(g) for g in groups]


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


CONFIG_KEYS = {
    "total_mu": float,
    "ratios": _parse_ratios,
    "theta": float,
    "max_depth": int,
    "min_count": int,
    "bounds": _parse_bounds,
    "label_bounds": _parse_pair,
    "seed": int,
    "reps": int,
    "alpha": float,
    "strict_l2_mode": _parse_bool,
    "algorithm2_literal_debias": _parse_bool,
    "intercept": _parse_bool,
    # harness extras
    "n": int,
    "d": int,
    "sigma": float,
    "n_grid": _parse_int_list,
    "bound_inflation": float,
    "seeds": int,
    "label_column": str,
    "clip_policy": str,
    "report": str,
}


def parse_config_file(path: str | Path) -> dict:
    """Parse a config file into a dict of typed values."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"no such config file: {path}")
    values: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        text = text.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"{path}:{lineno}: duplicate config key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](text)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return values
