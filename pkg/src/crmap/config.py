"""Experiment configuration: a flat ``key = value`` file, overridable from the command line."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional


class ConfigError(ValueError):
    """Bad configuration file or option value."""


METHODS = ("crm", "logodds")
SUPPORTS = ("midpoint", "bernoulli")
MAX_RANGE_POLICIES = ("keep", "no_return", "discard")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class ExperimentConfig:
    # files
    map: Optional[str] = None
    trajectory: Optional[str] = None
    scan_log: Optional[str] = None
    belief: Optional[str] = None
    diagnostics: Optional[str] = None
    out: Optional[str] = None
    snapshot_dir: Optional[str] = None
    # sensor rig
    rays: int = 60
    fov: float = 360.0
    max_range: float = 1.0
    noise_std: float = 0.05
    seed: int = 0
    # ranging model
    space: str = "range"
    f: float = 1.0
    baseline: float = 1.0
    p_spur: float = 0.01
    p_miss: float = 0.01
    max_range_returns: str = "keep"
    # mapping method
    method: str = "crm"
    k: int = 32
    support: str = "midpoint"
    eps: float = 1e-6
    q_l: float = 0.45
    q_h: float = 0.55
    r_ramp: float = 0.1
    r_top: float = 0.1
    # evaluation and sweeps
    gamma: tuple[float, ...] = (0.5, 1.25, 2.0)
    updated_only: bool = False
    sweep: str = "ism"
    noise_levels: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    seeds: int = 10
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.support not in SUPPORTS:
            raise ConfigError(f"unknown support {self.support!r}; expected one of {', '.join(SUPPORTS)}")
        if self.max_range_returns not in MAX_RANGE_POLICIES:
            raise ConfigError(f"max_range_returns must be one of {', '.join(MAX_RANGE_POLICIES)}")
        if self.space not in ("range", "disparity"):
            raise ConfigError(f"space must be 'range' or 'disparity', got {self.space!r}")
        if self.sweep not in ("ism", "noise"):
            raise ConfigError(f"sweep must be 'ism' or 'noise', got {self.sweep!r}")
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if self.rays < 1:
            raise ConfigError("rays must be at least 1")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")
        if not self.max_range > 0:
            raise ConfigError("max_range must be positive")
        if any(g < 0 for g in self.gamma) or not self.gamma:
            raise ConfigError("gamma must be a non-empty list of non-negative numbers")
        if self.seeds < 1 or self.jobs < 1:
            raise ConfigError("seeds and jobs must be at least 1")
        return self


def _converter(f: dataclasses.Field):
    t = f.type
    if t in ("int", int):
        return int
    if t in ("float", float):
        return float
    if t in ("bool", bool):
        return _bool
    if "tuple" in str(t):
        return _floats
    return str


CONVERTERS = {f.name: _converter(f) for f in fields(ExperimentConfig)}


def parse_value(key: str, text: str):
    if key not in CONVERTERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return CONVERTERS[key](text.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Dashes in keys map to underscores."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        try:
            values[key] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def build_config(file_values: Optional[dict] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Defaults, then config-file values, then explicit overrides."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig(**merged).validate()
