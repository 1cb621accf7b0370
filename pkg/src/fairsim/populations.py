"""Synthetic populations and proxy scorers for the simulators.

Populations are drawn from group-conditional truncated normals whose means
and spreads are configuration, chosen so that the proxy scores (loan
qualification, health risk, baseline GPA) show the advantaged/disadvantaged
disparity the simulators are meant to study.  The scorer coefficients are
shipped as calibrated defaults, not fitted models.

A CSV path exists for plugging in externally prepared populations; column
names follow the environments' feature vocabularies (FICO_RANGE_LOW, HICOV,
GPA, ...).  Rows with missing values are dropped; malformed rows raise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "Individual",
    "FeatureDist",
    "PopulationConfig",
    "AffineScorer",
    "CsvSchema",
    "CsvParseError",
    "generate_population",
    "resample_individual",
    "load_csv",
]


@dataclass
class Individual:
    """One person: group label plus a named feature record.

    ``env_state`` is reserved for environment-specific lifecycle data; the
    simulators keep their own array-backed state and leave it None.
    """

    id: int
    group: int
    features: dict[str, float]
    env_state: Any = None


@dataclass(frozen=True)
class FeatureDist:
    """Truncated-normal spec for one feature within one group."""

    mean: float
    std: float
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self) -> None:
        if self.std < 0:
            raise ValueError("std must be >= 0")
        if self.lo > self.hi:
            raise ValueError("lo must be <= hi")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.std == 0:
            return np.full(size, self.mean)
        a = (self.lo - self.mean) / self.std
        b = (self.hi - self.mean) / self.std
        return stats.truncnorm.rvs(a, b, loc=self.mean, scale=self.std, size=size, random_state=rng)


@dataclass
class PopulationConfig:
    """How to draw N individuals across D groups.

    ``feature_dists[name]`` holds one :class:`FeatureDist` per group.
    ``region_feature`` names a feature assigned by the region rule:
    "group" copies the group label (the healthcare case, where geography is
    the sensitive attribute) and "uniform" draws uniformly over
    ``n_regions`` (the education tertiary regions).
    """

    size: int
    n_groups: int
    group_proportions: tuple[float, ...]
    feature_dists: dict[str, tuple[FeatureDist, ...]]
    seed: int = 0
    n_regions: int = 0
    region_feature: Optional[str] = None
    region_mode: str = "uniform"  # "group" | "uniform"

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("population size must be >= 1")
        props = np.asarray(self.group_proportions, dtype=np.float64)
        if props.shape[0] != self.n_groups or np.any(props < 0) or abs(props.sum() - 1.0) > 1e-9:
            raise ValueError("group_proportions must be a simplex vector of length n_groups")
        for name, dists in self.feature_dists.items():
            if len(dists) != self.n_groups:
                raise ValueError(f"feature {name!r} needs one distribution per group")
        if self.region_feature is not None and self.region_mode not in ("group", "uniform"):
            raise ValueError("region_mode must be 'group' or 'uniform'")

    @property
    def feature_names(self) -> tuple[str, ...]:
        names = tuple(self.feature_dists)
        if self.region_feature is not None and self.region_feature not in names:
            names = names + (self.region_feature,)
        return names


def _group_counts(size: int, proportions: Sequence[float]) -> np.ndarray:
    """Largest-remainder rounding so counts are deterministic and sum to N."""
    raw = np.asarray(proportions) * size
    counts = np.floor(raw).astype(int)
    remainder = size - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    for i in range(remainder):
        counts[order[i]] += 1
    return counts


def _draw_features(cfg: PopulationConfig, group: int, size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    values = {name: dists[group].sample(rng, size) for name, dists in cfg.feature_dists.items()}
    if cfg.region_feature is not None:
        if cfg.region_mode == "group":
            values[cfg.region_feature] = np.full(size, float(group))
        else:
            values[cfg.region_feature] = rng.integers(0, cfg.n_regions, size=size).astype(np.float64)
    return values


def generate_population(cfg: PopulationConfig) -> list[Individual]:
    """Draw the full population; deterministic for a given config seed."""
    rng = np.random.default_rng(cfg.seed)
    counts = _group_counts(cfg.size, cfg.group_proportions)
    groups = np.repeat(np.arange(cfg.n_groups), counts)
    # Interleave groups so ids carry no group information.
    order = rng.permutation(cfg.size)
    groups = groups[order]

    per_group_values = {g: _draw_features(cfg, g, int(counts[g]), rng) for g in range(cfg.n_groups)}
    cursors = {g: 0 for g in range(cfg.n_groups)}

    individuals = []
    for i in range(cfg.size):
        g = int(groups[i])
        k = cursors[g]
        cursors[g] += 1
        features = {name: float(vals[k]) for name, vals in per_group_values[g].items()}
        individuals.append(Individual(id=i, group=g, features=features))
    return individuals


def resample_individual(
    cfg: PopulationConfig,
    group: int,
    rng: np.random.Generator,
    new_id: int,
    region: Optional[float] = None,
) -> Individual:
    """Fresh individual from a group's distribution (population replacement).

    When a region is given it overrides the region rule, so replacements stay
    in the region of the individual they replace.
    """
    values = _draw_features(cfg, group, 1, rng)
    features = {name: float(vals[0]) for name, vals in values.items()}
    if region is not None and cfg.region_feature is not None:
        features[cfg.region_feature] = float(region)
    return Individual(id=new_id, group=group, features=features)


# ---------------------------------------------------------------------------
# Proxy scorers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineScorer:
    """transform(w . v + b) over named features.

    ``transform`` is one of "logistic", "clip" (with clip_lo/clip_hi) or
    "identity".  Weights reference feature names so scorers are robust to
    feature-order changes.
    """

    weights: dict[str, float]
    bias: float = 0.0
    transform: str = "identity"
    clip_lo: float = 0.0
    clip_hi: float = 1.0

    def __post_init__(self) -> None:
        if self.transform not in ("logistic", "clip", "identity"):
            raise ValueError("transform must be 'logistic', 'clip' or 'identity'")
        if self.transform == "clip" and self.clip_lo > self.clip_hi:
            raise ValueError("clip_lo must be <= clip_hi")

    def score(self, features: dict[str, float]) -> float:
        z = self.bias
        for name, w in self.weights.items():
            if name not in features:
                raise KeyError(f"scorer references unknown feature {name!r}")
            z += w * features[name]
        return float(self._apply(np.asarray(z)))

    def score_columns(self, columns: dict[str, np.ndarray]) -> np.ndarray:
        """Vectorized scoring over parallel feature arrays."""
        first = next(iter(columns.values()))
        z = np.full(first.shape, self.bias, dtype=np.float64)
        for name, w in self.weights.items():
            if name not in columns:
                raise KeyError(f"scorer references unknown feature {name!r}")
            z += w * columns[name]
        return self._apply(z)

    def _apply(self, z: np.ndarray) -> np.ndarray:
        if self.transform == "logistic":
            out = np.empty_like(z, dtype=np.float64)
            pos = z >= 0
            out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
            ez = np.exp(z[~pos])
            out[~pos] = ez / (1.0 + ez)
            return out
        if self.transform == "clip":
            return np.clip(z, self.clip_lo, self.clip_hi)
        return np.asarray(z, dtype=np.float64)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


class CsvParseError(ValueError):
    """A CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


_MISSING_TOKENS = {"", "na", "n/a", "nan", "null", "none"}


@dataclass(frozen=True)
class CsvSchema:
    """Expected columns: every feature name plus the group column."""

    feature_names: tuple[str, ...]
    group_column: str = "GROUP"

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_names", tuple(self.feature_names))


def load_csv(path, schema: CsvSchema) -> list[Individual]:
    """Parse one individual per row; rows with missing values are dropped.

    Unknown extra columns are ignored.  A malformed (non-numeric, non-missing)
    value raises :class:`CsvParseError` with its line number.
    """
    individuals: list[Individual] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        header = set(reader.fieldnames)
        required = set(schema.feature_names) | {schema.group_column}
        missing_cols = sorted(required - header)
        if missing_cols:
            raise CsvParseError(1, f"missing required columns: {missing_cols}")

        next_id = 0
        for row in reader:
            line = reader.line_num
            raw_values = [row[schema.group_column]] + [row[name] for name in schema.feature_names]
            if any(v is None or v.strip().lower() in _MISSING_TOKENS for v in raw_values):
                continue
            try:
                group = int(float(row[schema.group_column]))
                features = {name: float(row[name]) for name in schema.feature_names}
            except ValueError as exc:
                raise CsvParseError(line, str(exc)) from exc
            individuals.append(Individual(id=next_id, group=group, features=features))
            next_id += 1
    return individuals
