"""Plumbing shared by the three simulators.

Each simulator keeps its population in parallel numpy arrays (one column per
feature) for speed, seeds a named family of random streams so that
intervention experiments can override one mechanism without disturbing the
draws of any other, and standardizes observation columns with population
statistics captured at reset.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..core import ContractError, ObservationMatrix
from ..populations import Individual

__all__ = ["StreamFamily", "ColumnStore", "ObservationBuilder", "require_action"]


class StreamFamily:
    """Named, independently-seeded random generators.

    Streams are derived from one seed via spawned ``SeedSequence`` children in
    a fixed name order, so adding draws to one mechanism never shifts the
    sequences of the others.
    """

    def __init__(self, seed: int, names: Sequence[str]):
        self._names = tuple(names)
        children = np.random.SeedSequence(seed).spawn(len(self._names))
        self._streams = {name: np.random.default_rng(child) for name, child in zip(self._names, children)}
        self.draw_counts = {name: 0 for name in self._names}

    def __getitem__(self, name: str) -> np.random.Generator:
        return self._streams[name]

    def random(self, name: str, size: int) -> np.ndarray:
        self.draw_counts[name] += int(size)
        return self._streams[name].random(size)

    def normal(self, name: str, loc: float, scale: float, size: int) -> np.ndarray:
        self.draw_counts[name] += int(size)
        return self._streams[name].normal(loc, scale, size)

    def choice(self, name: str, pool: np.ndarray, size: int) -> np.ndarray:
        self.draw_counts[name] += int(size)
        return self._streams[name].choice(pool, size=size, replace=False)

    def integers(self, name: str, low: int, high: int, size: int) -> np.ndarray:
        self.draw_counts[name] += int(size)
        return self._streams[name].integers(low, high, size=size)


class ColumnStore:
    """Mutable per-individual feature columns built from a population list."""

    def __init__(self, individuals: Sequence[Individual], feature_names: Iterable[str]):
        self.size = len(individuals)
        self.ids = np.array([ind.id for ind in individuals], dtype=np.int64)
        self.group = np.array([ind.group for ind in individuals], dtype=np.int64)
        self.columns: dict[str, np.ndarray] = {}
        for name in feature_names:
            try:
                self.columns[name] = np.array([ind.features[name] for ind in individuals], dtype=np.float64)
            except KeyError as exc:
                raise KeyError(f"population is missing feature {name!r}") from exc

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __setitem__(self, name: str, values: np.ndarray) -> None:
        self.columns[name] = values

    def subset(self, idx: np.ndarray) -> dict[str, np.ndarray]:
        return {name: col[idx] for name, col in self.columns.items()}


class ObservationBuilder:
    """Builds standardized observation matrices from named columns.

    Standardization statistics are captured once, at reset, over the initial
    population; columns that are constant at reset (dynamic counters, flags)
    pass through with unit scale so they stay interpretable.
    """

    def __init__(self) -> None:
        self._mean: dict[str, float] = {}
        self._std: dict[str, float] = {}

    def capture(self, columns: dict[str, np.ndarray]) -> None:
        self._mean = {}
        self._std = {}
        for name, col in columns.items():
            mean = float(col.mean()) if col.size else 0.0
            std = float(col.std()) if col.size else 0.0
            self._mean[name] = mean
            self._std[name] = std if std > 1e-8 else 1.0

    def build(self, feature_ids: Sequence[str], columns: dict[str, np.ndarray], ids: np.ndarray) -> ObservationMatrix:
        n = ids.shape[0]
        rows = np.empty((n, len(feature_ids)))
        for j, name in enumerate(feature_ids):
            col = columns[name]
            mean = self._mean.get(name, 0.0)
            std = self._std.get(name, 1.0)
            rows[:, j] = (col - mean) / std
        return ObservationMatrix(rows=rows, row_ids=ids)


def require_action(actions, agent_id: int, name: str, expected_len: int) -> np.ndarray:
    """Fetch and length-check one agent's action from a step's action dict."""
    if agent_id not in actions:
        raise ContractError(f"agent {agent_id} ({name}) must act this step but no action was supplied")
    action = np.asarray(actions[agent_id], dtype=np.float64)
    if action.shape != (expected_len,):
        raise ContractError(f"agent {agent_id} ({name}): expected action shape ({expected_len},), got {action.shape}")
    return action


def check_simplex_blocks(action: np.ndarray, block_sizes: Sequence[int], agent_name: str, tol: float = 1e-6) -> None:
    offset = 0
    for size in block_sizes:
        block = action[offset : offset + size]
        if np.any(block < -tol) or abs(block.sum() - 1.0) > tol:
            raise ContractError(
                f"agent {agent_name}: action block at offset {offset} (size {size}) is not a simplex (sum={block.sum():.6f})"
            )
        offset += size
