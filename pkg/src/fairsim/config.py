"""Configuration loading and the environment registry.

Environments are configured through TOML files with one table per
environment (``[loan]``, ``[healthcare]``, ``[education]``) whose keys match
the corresponding config dataclass fields; nested tables reach nested
dataclasses (``[loan.population]`` for population size, proportions and
seed).  Keys not present keep their defaults, which carry the reference
hyperparameters (horizons, action periods, budgets, curve constants,
normalization factors).
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import is_dataclass, replace
from typing import Any, Callable, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import Environment
from .envs.education import EducationConfig, EducationEnv
from .envs.healthcare import HealthcareConfig, HealthcareEnv
from .envs.loan import LoanConfig, LoanEnv

__all__ = ["ENV_NAMES", "ConfigError", "default_config", "load_overrides", "apply_overrides", "make_env"]

ENV_NAMES = ("loan", "healthcare", "education")


class ConfigError(ValueError):
    """Bad configuration file or overrides."""


_CONFIG_TYPES = {
    "loan": LoanConfig,
    "healthcare": HealthcareConfig,
    "education": EducationConfig,
}

_ENV_TYPES: dict[str, Callable[..., Environment]] = {
    "loan": LoanEnv,
    "healthcare": HealthcareEnv,
    "education": EducationEnv,
}


def default_config(env_name: str):
    if env_name not in _CONFIG_TYPES:
        raise ConfigError(f"unknown environment {env_name!r}; expected one of {ENV_NAMES}")
    return _CONFIG_TYPES[env_name]()


def load_overrides(path: str) -> dict[str, Any]:
    """Read a TOML file into a plain dict of tables."""
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def apply_overrides(cfg, overrides: dict[str, Any]):
    """Return a copy of a config dataclass with override keys applied.

    Tuple-typed fields accept TOML arrays; nested dataclasses accept nested
    tables.  Unknown keys are an error, so typos fail loudly.
    """
    if not overrides:
        return cfg
    field_map = {f.name: f for f in dataclasses.fields(cfg)}
    updates: dict[str, Any] = {}
    for key, value in overrides.items():
        if key not in field_map:
            raise ConfigError(f"{type(cfg).__name__} has no field {key!r}")
        current = getattr(cfg, key)
        if is_dataclass(current) and isinstance(value, dict):
            updates[key] = apply_overrides(current, value)
        elif isinstance(current, tuple) and isinstance(value, list):
            updates[key] = tuple(value)
        elif isinstance(value, dict) and isinstance(current, dict):
            merged = dict(current)
            merged.update({k: tuple(v) if isinstance(v, list) else v for k, v in value.items()})
            updates[key] = merged
        else:
            updates[key] = value
    try:
        return replace(cfg, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid override for {type(cfg).__name__}: {exc}") from exc


def make_env(
    env_name: str,
    config_path: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
    population=None,
) -> Environment:
    """Build an environment from defaults + optional TOML file + overrides.

    The file's ``[<env_name>]`` table is applied first, then ``overrides``.
    """
    cfg = default_config(env_name)
    if config_path is not None:
        tables = load_overrides(config_path)
        cfg = apply_overrides(cfg, tables.get(env_name, {}))
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return _ENV_TYPES[env_name](cfg, population=population)
