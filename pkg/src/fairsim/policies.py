"""Affine permutation-equivariant policies over observation matrices.

Each agent's policy is a flat parameter vector plus a layout derived from its
:class:`~fairsim.core.AgentSpec`.  Three action kinds are supported:

* individual scores - row-wise ``logistic(w . v_i + b)``, equivariant under
  row permutations by construction;
* group vectors - mean-pool the rows into one feature vector, then apply an
  independent logistic unit per output;
* budget trees - mean-pool, then per block compute affine logits and a
  softmax, so each block is a simplex.

Parameters are sampled and updated by the evolutionary trainer as one flat
vector, so the layout fixes a deterministic packing order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ActionKind,
    AgentSpec,
    BudgetTree,
    GroupVector,
    IndividualScores,
    ObservationMatrix,
    SchemaError,
)

__all__ = [
    "PolicyLayout",
    "PolicyParams",
    "AffinePolicy",
    "layout_for",
    "score_individuals",
    "group_action",
    "budget_tree_action",
    "flatten_params",
    "unflatten_params",
    "params_to_json",
    "params_from_json",
    "logistic",
    "softmax",
]


def logistic(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    ez = np.exp(shifted)
    return ez / ez.sum()


@dataclass(frozen=True)
class PolicyLayout:
    """Shape metadata tying a flat parameter vector to an action kind."""

    kind: ActionKind
    obs_width: int

    @property
    def n_units(self) -> int:
        """Number of affine units (each unit holds obs_width weights + bias)."""
        if isinstance(self.kind, IndividualScores):
            return 1
        if isinstance(self.kind, GroupVector):
            return self.kind.dims
        return self.kind.total_dims

    @property
    def param_count(self) -> int:
        return self.n_units * (self.obs_width + 1)


def layout_for(spec: AgentSpec) -> PolicyLayout:
    return PolicyLayout(kind=spec.action_kind, obs_width=spec.obs_width)


@dataclass
class PolicyParams:
    """A flat theta plus its layout."""

    theta: np.ndarray
    layout: PolicyLayout

    def __post_init__(self) -> None:
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != (self.layout.param_count,):
            raise SchemaError(
                f"theta length {self.theta.shape} does not match layout param_count {self.layout.param_count}"
            )

    @property
    def weights(self) -> np.ndarray:
        """(n_units, obs_width) weight matrix view."""
        k = self.layout.obs_width
        return self.theta.reshape(self.layout.n_units, k + 1)[:, :k]

    @property
    def biases(self) -> np.ndarray:
        k = self.layout.obs_width
        return self.theta.reshape(self.layout.n_units, k + 1)[:, k]


def flatten_params(weights: np.ndarray, biases: np.ndarray, layout: PolicyLayout) -> PolicyParams:
    """Pack (weights, biases) into the canonical flat ordering."""
    weights = np.asarray(weights, dtype=np.float64).reshape(layout.n_units, layout.obs_width)
    biases = np.asarray(biases, dtype=np.float64).reshape(layout.n_units)
    theta = np.concatenate([weights, biases[:, None]], axis=1).ravel()
    return PolicyParams(theta=theta, layout=layout)


def unflatten_params(params: PolicyParams) -> tuple[np.ndarray, np.ndarray]:
    return params.weights.copy(), params.biases.copy()


def _check_width(params: PolicyParams, obs: ObservationMatrix) -> None:
    if obs.n_features != params.layout.obs_width:
        raise SchemaError(
            f"observation has {obs.n_features} columns, layout expects {params.layout.obs_width}"
        )


def _pooled(obs: ObservationMatrix) -> np.ndarray:
    # Empty observations pool to the zero vector so policies stay total.
    if obs.n_rows == 0:
        return np.zeros(obs.n_features)
    return obs.rows.mean(axis=0)


def score_individuals(params: PolicyParams, obs: ObservationMatrix) -> np.ndarray:
    """Row-wise logistic scores in [0,1]; output i belongs to row_ids[i]."""
    if not isinstance(params.layout.kind, IndividualScores):
        raise SchemaError("layout kind is not IndividualScores")
    _check_width(params, obs)
    if obs.n_rows == 0:
        return np.empty(0)
    z = obs.rows @ params.weights[0] + params.biases[0]
    return logistic(z)


def group_action(params: PolicyParams, obs: ObservationMatrix) -> np.ndarray:
    """Mean-pool the rows, then one logistic unit per output dimension."""
    if not isinstance(params.layout.kind, GroupVector):
        raise SchemaError("layout kind is not GroupVector")
    _check_width(params, obs)
    pooled = _pooled(obs)
    return logistic(params.weights @ pooled + params.biases)


def budget_tree_action(params: PolicyParams, obs: ObservationMatrix) -> np.ndarray:
    """Mean-pool, then per-block softmax over affine logits."""
    kind = params.layout.kind
    if not isinstance(kind, BudgetTree):
        raise SchemaError("layout kind is not BudgetTree")
    _check_width(params, obs)
    pooled = _pooled(obs)
    logits = params.weights @ pooled + params.biases
    out = np.empty(kind.total_dims)
    offset = 0
    for size in kind.block_sizes:
        out[offset : offset + size] = softmax(logits[offset : offset + size])
        offset += size
    return out


def params_to_json(params: PolicyParams) -> str:
    """Serialize theta plus a layout descriptor (checkpoint format)."""
    import json

    kind = params.layout.kind
    if isinstance(kind, IndividualScores):
        descriptor = {"kind": "individual_scores"}
    elif isinstance(kind, GroupVector):
        descriptor = {"kind": "group_vector", "dims": kind.dims}
    else:
        descriptor = {"kind": "budget_tree", "block_sizes": list(kind.block_sizes)}
    descriptor["obs_width"] = params.layout.obs_width
    return json.dumps({"theta": params.theta.tolist(), "layout": descriptor})


def params_from_json(payload: str) -> PolicyParams:
    import json

    record = json.loads(payload)
    descriptor = record["layout"]
    kind_name = descriptor["kind"]
    if kind_name == "individual_scores":
        kind: ActionKind = IndividualScores()
    elif kind_name == "group_vector":
        kind = GroupVector(dims=int(descriptor["dims"]))
    elif kind_name == "budget_tree":
        kind = BudgetTree(block_sizes=tuple(descriptor["block_sizes"]))
    else:
        raise SchemaError(f"unknown layout kind {kind_name!r}")
    layout = PolicyLayout(kind=kind, obs_width=int(descriptor["obs_width"]))
    return PolicyParams(theta=np.asarray(record["theta"], dtype=np.float64), layout=layout)


class AffinePolicy:
    """Callable policy: dispatches on the layout's action kind."""

    def __init__(self, params: PolicyParams):
        self.params = params

    @classmethod
    def zeros(cls, spec: AgentSpec) -> "AffinePolicy":
        layout = layout_for(spec)
        return cls(PolicyParams(theta=np.zeros(layout.param_count), layout=layout))

    @classmethod
    def from_theta(cls, spec: AgentSpec, theta: np.ndarray) -> "AffinePolicy":
        return cls(PolicyParams(theta=np.asarray(theta, dtype=np.float64), layout=layout_for(spec)))

    def __call__(self, obs: ObservationMatrix) -> np.ndarray:
        kind = self.params.layout.kind
        if isinstance(kind, IndividualScores):
            return score_individuals(self.params, obs)
        if isinstance(kind, GroupVector):
            return group_action(self.params, obs)
        return budget_tree_action(self.params, obs)


class ConstantPolicy:
    """Always returns a fixed vector (group/budget kinds only)."""

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)

    def __call__(self, obs: ObservationMatrix) -> np.ndarray:
        return self.value.copy()


class ConstantFillPolicy:
    """One fixed score repeated for every observation row."""

    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, obs: ObservationMatrix) -> np.ndarray:
        return np.full(obs.n_rows, self.value)


class RandomScorePolicy:
    """Uniform-random individual scores from an owned generator.

    Used by the fixed loan baseline, where a random queue ordering equalizes
    expected wait times across groups.
    """

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)

    def __call__(self, obs: ObservationMatrix) -> np.ndarray:
        return self._rng.random(obs.n_rows)
