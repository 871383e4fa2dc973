"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Values are parsed as int, float,
bool, comma-separated lists of numbers, or left as strings. Every key must be
one of ``DEFAULTS``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

DEFAULTS: dict[str, Any] = {
    "experiment.target": "synthetic_scalar",
    "experiment.d": 1,
    "experiment.scheme": "i",
    "experiment.n_grid": [64, 128, 256, 512],
    "experiment.n": 0,
    "experiment.seed": 0,
    "experiment.test_count": 2000,
    "experiment.active_factor": 4,
    "experiment.threads": 1,
    "weights.kind": "affine",
    "weights.eta": 3,
    "weights.rho": "geometric",
    "weights.rho_base": 1.0,
    "weights.rho_ratio": 2.0,
    "weights.rho_scale": 1.0,
    "weights.rho_power": 2.0,
    "weights.dims": 0,
    "weights.c": "legendre",
    "weights.q": 1.0,
    "weights.normalize": False,
    "basis.family": "jacobi",
    "basis.a": 0.0,
    "basis.b": 0.0,
    "sampling.log_factor": 20.0,
    "sampling.pool_factor": 20.0,
    "sampling.c1": 1.0,
    "sampling.c2": 1.2,
    "sampling.tail_tol": 1e-6,
    "sampling.lambda_floor": 0.5,
    "sampling.candidates": 0,
    "sampling.refresh": 0,
    "field.kind": "lognormal",
    "field.psi": "sine",
    "field.kappa": 1.0,
    "field.theta": 3.0,
    "field.J": 8,
    "field.abar": 1.0,
    "mesh.nh": 256,
    "rhs.constant": 1.0,
    "widths.xi": 32.0,
    "widths.count": 20,
}


class ConfigError(ValueError):
    """Malformed configuration."""


def _parse_value(text: str) -> Any:
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in text:
        return [_parse_value(part.strip()) for part in text.split(",") if part.strip()]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _coerce(key: str, value: Any) -> Any:
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ValueError
            return value
        if isinstance(default, list):
            items = value if isinstance(value, list) else [value]
            return [int(v) for v in items]
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {value!r} for {key}") from None


class Config(dict):
    """Configuration mapping with every key filled from ``DEFAULTS``."""

    def __init__(self, values: Mapping[str, Any] | None = None):
        super().__init__(DEFAULTS)
        for key, value in (values or {}).items():
            self.set(key, value)

    def set(self, key: str, value: Any) -> None:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown configuration key {key!r}")
        self[key] = _coerce(key, value)

    def dumps(self) -> str:
        return "".join(f"{key} = {_format(self[key])}\n" for key in sorted(self))


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, list):
        return ", ".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_config(text: str) -> Config:
    """Parse configuration text."""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        values[key] = _parse_value(value)
    return Config(values)


def load_config(path: str | Path | None) -> Config:
    """Read a configuration file; ``None`` gives the defaults."""
    if path is None:
        return Config()
    return parse_config(Path(path).read_text())
