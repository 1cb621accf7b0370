"""Shared contract for the social-system simulators.

Every environment in this package is an episodic multi-agent simulation that,
instead of emitting scalar rewards, emits per-step *component vectors*: raw
counts and values from which rewards and group-disparity measures are
assembled after aggregation over time.  This module defines

* the agent/action/observation contract (:class:`AgentSpec`,
  :class:`ObservationMatrix`),
* the component bookkeeping (:class:`ComponentSchema`,
  :class:`StepComponents`, :class:`ComponentAccumulator`),
* the scoring of a finished episode (:class:`SuccessSpec`,
  :func:`total_rewards`, :func:`fairness_two_group`, :func:`fairness_d_group`,
  :func:`episode_success`),
* the generic episode runner (:func:`run_episode`).

Aggregation happens ratio-after-sum: rate rewards and group rates divide the
time-summed numerator by the time-summed denominator, never averaging
per-step ratios.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "IndividualScores",
    "GroupVector",
    "BudgetTree",
    "AgentSpec",
    "ObservationMatrix",
    "ComponentSchema",
    "StepComponents",
    "ComponentAccumulator",
    "SuccessSpec",
    "Termination",
    "EpisodeResult",
    "Environment",
    "SchemaError",
    "ContractError",
    "accumulate",
    "total_rewards",
    "fairness_two_group",
    "fairness_d_group",
    "fairness_violations",
    "episode_success",
    "run_episode",
]


class SchemaError(ValueError):
    """A component vector does not match the environment's schema."""


class ContractError(RuntimeError):
    """An agent or environment violated the step contract."""


# ---------------------------------------------------------------------------
# Action kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndividualScores:
    """One score in [0, 1] per row of the agent's observation matrix."""


@dataclass(frozen=True)
class GroupVector:
    """A fixed-width vector in [0, 1]^dims applied to a whole cohort."""

    dims: int

    def __post_init__(self) -> None:
        if self.dims < 1:
            raise ValueError("GroupVector dims must be >= 1")


@dataclass(frozen=True)
class BudgetTree:
    """Concatenated simplex blocks (category shares, then regional shares)."""

    block_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        if not self.block_sizes or any(b < 1 for b in self.block_sizes):
            raise ValueError("BudgetTree blocks must be non-empty and all >= 1")

    @property
    def total_dims(self) -> int:
        return sum(self.block_sizes)


ActionKind = IndividualScores | GroupVector | BudgetTree


@dataclass(frozen=True)
class AgentSpec:
    """Static description of one decision-making agent.

    ``action_period`` is the k in "acts every k time steps": the agent's
    policy is invoked only when ``t % action_period == 0``; the environment
    keeps the most recent action in force in between.
    """

    agent_id: int
    name: str
    obs_feature_ids: tuple[str, ...]
    action_kind: ActionKind
    action_period: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "obs_feature_ids", tuple(self.obs_feature_ids))
        if self.action_period < 1:
            raise ValueError("action_period must be >= 1")
        if not self.obs_feature_ids:
            raise ValueError("obs_feature_ids must be non-empty")
        if len(set(self.obs_feature_ids)) != len(self.obs_feature_ids):
            raise ValueError("obs_feature_ids must be duplicate-free")

    @property
    def obs_width(self) -> int:
        return len(self.obs_feature_ids)


@dataclass
class ObservationMatrix:
    """m individuals x k features, with the individual ids aligned to rows."""

    rows: np.ndarray  # (m, k) float64
    row_ids: np.ndarray  # (m,) int64

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.float64)
        self.row_ids = np.asarray(self.row_ids, dtype=np.int64)
        if self.rows.ndim != 2:
            raise SchemaError(f"observation rows must be 2-D, got shape {self.rows.shape}")
        if self.rows.shape[0] != self.row_ids.shape[0]:
            raise SchemaError("row_ids length must equal the number of rows")
        if self.rows.size and not np.all(np.isfinite(self.rows)):
            raise SchemaError("observation features must be finite")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]


# ---------------------------------------------------------------------------
# Component schema and accumulation
# ---------------------------------------------------------------------------

#: How a fairness measure is scaled before weighting.  "none" keeps the raw
#: disparity; "rate_sum" divides by the sum of the group rates, which maps
#: unbounded quantities (wait times, salaries) into [-1, 0].
FairnessNorm = str

_FAIRNESS_NORMS = ("none", "rate_sum")


@dataclass(frozen=True)
class ComponentSchema:
    """Layout of the per-step reward and fairness component vectors.

    Reward components: ``n_direct`` direct values, then ``n_rate`` rate
    numerators, then ``n_rate`` rate denominators (length j + 2l).  Fairness
    components: for each of ``n_fair_measures`` measures, ``n_groups``
    (numerator, denominator) pairs (length 2*D*M).

    ``rate_signs[i]`` is +1 or -1 and is applied to rate i after aggregation,
    so that "negative rate" objectives (default rates, mortality rates) enter
    the reward total with the right orientation while the stored components
    stay plain non-negative counts.
    """

    n_direct: int
    n_rate: int
    n_fair_measures: int
    n_groups: int
    direct_labels: tuple[str, ...] = ()
    rate_labels: tuple[str, ...] = ()
    fairness_labels: tuple[str, ...] = ()
    rate_signs: tuple[int, ...] = ()
    fairness_norms: tuple[FairnessNorm, ...] = ()

    def __post_init__(self) -> None:
        if min(self.n_direct, self.n_rate) < 0 or self.n_fair_measures < 0:
            raise ValueError("component counts must be non-negative")
        if self.n_fair_measures > 0 and self.n_groups < 2:
            raise ValueError("fairness measures need at least two groups")

        def _default(values, size, fill):
            values = tuple(values) if values else tuple(fill(i) for i in range(size))
            if len(values) != size:
                raise ValueError(f"expected {size} entries, got {len(values)}")
            return values

        object.__setattr__(self, "direct_labels", _default(self.direct_labels, self.n_direct, lambda i: f"direct_{i}"))
        object.__setattr__(self, "rate_labels", _default(self.rate_labels, self.n_rate, lambda i: f"rate_{i}"))
        object.__setattr__(
            self, "fairness_labels", _default(self.fairness_labels, self.n_fair_measures, lambda i: f"fairness_{i}")
        )
        object.__setattr__(self, "rate_signs", _default(self.rate_signs, self.n_rate, lambda i: 1))
        object.__setattr__(self, "fairness_norms", _default(self.fairness_norms, self.n_fair_measures, lambda i: "none"))
        if any(s not in (-1, 1) for s in self.rate_signs):
            raise ValueError("rate_signs entries must be +1 or -1")
        if any(n not in _FAIRNESS_NORMS for n in self.fairness_norms):
            raise ValueError(f"fairness_norms entries must be one of {_FAIRNESS_NORMS}")

    @property
    def n_rewards(self) -> int:
        """K = j + l."""
        return self.n_direct + self.n_rate

    @property
    def reward_len(self) -> int:
        return self.n_direct + 2 * self.n_rate

    @property
    def fairness_len(self) -> int:
        return 2 * self.n_groups * self.n_fair_measures

    @property
    def reward_names(self) -> tuple[str, ...]:
        return self.direct_labels + self.rate_labels


@dataclass
class StepComponents:
    """Raw component vectors emitted by one environment step."""

    reward_components: np.ndarray
    fairness_components: np.ndarray
    t: int

    def __post_init__(self) -> None:
        self.reward_components = np.asarray(self.reward_components, dtype=np.float64)
        self.fairness_components = np.asarray(self.fairness_components, dtype=np.float64)


@dataclass
class ComponentAccumulator:
    """Element-wise time sums of step components for one episode."""

    reward_sums: np.ndarray
    fairness_sums: np.ndarray
    steps: int = 0
    zero_rate_flags: set = field(default_factory=set)

    @classmethod
    def zeros(cls, schema: ComponentSchema) -> "ComponentAccumulator":
        return cls(
            reward_sums=np.zeros(schema.reward_len),
            fairness_sums=np.zeros(schema.fairness_len),
        )


def accumulate(acc: ComponentAccumulator, step: StepComponents) -> ComponentAccumulator:
    """Add one step's components into the running sums (in place)."""
    if step.reward_components.shape != acc.reward_sums.shape:
        raise SchemaError(
            f"reward components length {step.reward_components.shape} does not match schema {acc.reward_sums.shape}"
        )
    if step.fairness_components.shape != acc.fairness_sums.shape:
        raise SchemaError(
            f"fairness components length {step.fairness_components.shape} does not match schema {acc.fairness_sums.shape}"
        )
    acc.reward_sums += step.reward_components
    acc.fairness_sums += step.fairness_components
    acc.steps += 1
    return acc


def _safe_rate(num: float, den: float, flag_key: str, flags: Optional[set]) -> float:
    # Early terminations legitimately leave empty cohorts; a zero denominator
    # yields rate 0 and a flag rather than an error.
    if den == 0.0:
        if flags is not None:
            flags.add(flag_key)
        return 0.0
    with np.errstate(over="ignore"):
        return float(num / den)


def total_rewards(acc: ComponentAccumulator, schema: ComponentSchema) -> np.ndarray:
    """Collapse accumulated reward components into the K reward totals.

    The first j entries are the direct sums; entry j+i is
    sign_i * (sum of numerators / sum of denominators) for rate i.
    """
    if acc.reward_sums.shape[0] != schema.reward_len:
        raise SchemaError("accumulator does not match schema")
    j, l = schema.n_direct, schema.n_rate
    out = np.empty(j + l)
    out[:j] = acc.reward_sums[:j]
    for i in range(l):
        num = acc.reward_sums[j + i]
        den = acc.reward_sums[j + l + i]
        out[j + i] = schema.rate_signs[i] * _safe_rate(num, den, f"reward:{schema.rate_labels[i]}", acc.zero_rate_flags)
    return out


def _group_rates(acc: ComponentAccumulator, schema: ComponentSchema, m: int) -> np.ndarray:
    """Aggregated rate of each group for fairness measure m (0-based)."""
    if not 0 <= m < schema.n_fair_measures:
        raise IndexError(f"fairness measure index {m} out of range")
    d = schema.n_groups
    base = 2 * d * m
    rates = np.empty(d)
    for g in range(d):
        num = acc.fairness_sums[base + 2 * g]
        den = acc.fairness_sums[base + 2 * g + 1]
        rates[g] = _safe_rate(num, den, f"fairness:{schema.fairness_labels[m]}:g{g}", acc.zero_rate_flags)
    return rates


def fairness_two_group(acc: ComponentAccumulator, schema: ComponentSchema, m: int) -> float:
    """Negated absolute difference of the two groups' aggregated rates."""
    if schema.n_groups != 2:
        raise SchemaError("fairness_two_group requires exactly two groups")
    rates = _group_rates(acc, schema, m)
    return -abs(rates[0] - rates[1])


def fairness_d_group(acc: ComponentAccumulator, schema: ComponentSchema, m: int) -> float:
    """Negated population standard deviation (divisor D) of the group rates."""
    if schema.n_groups < 2:
        raise SchemaError("fairness_d_group requires at least two groups")
    rates = _group_rates(acc, schema, m)
    mu = rates.mean()
    return -math.sqrt(float(np.mean((rates - mu) ** 2)))


def fairness_violations(acc: ComponentAccumulator, schema: ComponentSchema) -> np.ndarray:
    """All M violations, scaled per the schema's fairness_norms modes."""
    out = np.empty(schema.n_fair_measures)
    for m in range(schema.n_fair_measures):
        if schema.n_groups == 2:
            value = fairness_two_group(acc, schema, m)
        else:
            value = fairness_d_group(acc, schema, m)
        if schema.fairness_norms[m] == "rate_sum":
            total = float(_group_rates(acc, schema, m).sum())
            value = value / total if total > 0 else 0.0
        out[m] = value
    return out


# ---------------------------------------------------------------------------
# Episode scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuccessSpec:
    """Weights and normalizations defining the scalar episode score.

    ``alpha`` weights the K normalized reward totals, ``beta`` the M fairness
    violations.  ``epsilon`` holds optional per-measure disparity thresholds
    used for reporting only (an episode records whether |F| <= epsilon; the
    optimizer always works on the weighted sum).
    """

    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    reward_norms: tuple[float, ...]
    lam: Optional[float] = None
    epsilon: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "reward_norms", tuple(float(n) for n in self.reward_norms))
        if len(self.reward_norms) != len(self.alpha):
            raise ValueError("reward_norms must have length K")
        if any(n <= 0 for n in self.reward_norms):
            raise ValueError("reward_norms must be positive")
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", tuple(float(e) for e in self.epsilon))
            if len(self.epsilon) != len(self.beta):
                raise ValueError("epsilon must have length M")

    @classmethod
    def from_lambda(
        cls,
        lam: float,
        n_rewards: int,
        n_fairness: int,
        reward_norms: Optional[Sequence[float]] = None,
    ) -> "SuccessSpec":
        """Frontier weighting: alpha_k = lam/K, beta_m = (1-lam)/M."""
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        norms = tuple(reward_norms) if reward_norms is not None else (1.0,) * n_rewards
        return cls(
            alpha=(lam / n_rewards,) * n_rewards,
            beta=((1.0 - lam) / n_fairness,) * n_fairness if n_fairness else (),
            reward_norms=norms,
            lam=lam,
        )


def episode_success(totals: np.ndarray, violations: np.ndarray, spec: SuccessSpec) -> float:
    """sum_k alpha_k * (R_k / norm_k) + sum_m beta_m * F_m."""
    totals = np.asarray(totals, dtype=np.float64)
    violations = np.asarray(violations, dtype=np.float64)
    if totals.shape[0] != len(spec.alpha):
        raise SchemaError(f"expected {len(spec.alpha)} reward totals, got {totals.shape[0]}")
    if violations.shape[0] != len(spec.beta):
        raise SchemaError(f"expected {len(spec.beta)} violations, got {violations.shape[0]}")
    reward_part = sum(a * (r / n) for a, r, n in zip(spec.alpha, totals, spec.reward_norms))
    fairness_part = sum(b * f for b, f in zip(spec.beta, violations))
    return float(reward_part + fairness_part)


class Termination(enum.Enum):
    HORIZON = "Horizon"
    FINANCIAL_FAILURE = "FinancialFailure"
    POPULATION_DEPLETED = "PopulationDepleted"


@dataclass
class EpisodeResult:
    """Everything a finished episode reports."""

    total_rewards: np.ndarray
    fairness_violations: np.ndarray
    success: float
    termination: Termination
    steps_run: int
    seed: int
    zero_rate_flags: frozenset = frozenset()
    epsilon_satisfied: Optional[tuple[bool, ...]] = None
    mean_actions: Optional[dict[int, np.ndarray]] = None

    def to_json_line(self) -> str:
        """One-episode JSON record (seed, steps, termination, rewards, fairness, success)."""
        record = {
            "seed": self.seed,
            "steps_run": self.steps_run,
            "termination": self.termination.value,
            "rewards": [float(r) for r in self.total_rewards],
            "fairness": [float(f) for f in self.fairness_violations],
            "success": self.success,
        }
        if self.epsilon_satisfied is not None:
            record["epsilon_satisfied"] = list(self.epsilon_satisfied)
        return json.dumps(record)

    @classmethod
    def from_json_line(cls, line: str) -> "EpisodeResult":
        record = json.loads(line)
        return cls(
            total_rewards=np.asarray(record["rewards"], dtype=np.float64),
            fairness_violations=np.asarray(record["fairness"], dtype=np.float64),
            success=float(record["success"]),
            termination=Termination(record["termination"]),
            steps_run=int(record["steps_run"]),
            seed=int(record["seed"]),
            epsilon_satisfied=tuple(record["epsilon_satisfied"]) if "epsilon_satisfied" in record else None,
        )


# ---------------------------------------------------------------------------
# Environment contract and episode runner
# ---------------------------------------------------------------------------


class Environment:
    """Base class every simulator implements.

    Subclasses must set ``agent_specs``, ``component_schema``, ``horizon``
    and ``discount`` (stored for forward compatibility; all aggregation in
    this package is undiscounted) and implement :meth:`reset` /
    :meth:`step`.  ``step`` consumes exactly one action per agent whose
    period divides the current time index and returns the next observations,
    the step's components, and ``None`` or an early termination.
    """

    agent_specs: tuple[AgentSpec, ...]
    component_schema: ComponentSchema
    horizon: int
    discount: float = 1.0

    def reset(self, seed: int) -> dict[int, ObservationMatrix]:
        raise NotImplementedError

    def step(self, actions: Mapping[int, np.ndarray]) -> tuple[dict[int, ObservationMatrix], StepComponents, Optional[Termination]]:
        raise NotImplementedError

    # -- shared validation helpers -----------------------------------------

    def expected_action_shape(self, spec: AgentSpec, obs: ObservationMatrix) -> tuple[int, ...]:
        kind = spec.action_kind
        if isinstance(kind, IndividualScores):
            return (obs.n_rows,)
        if isinstance(kind, GroupVector):
            return (kind.dims,)
        return (kind.total_dims,)

    def validate_action(self, spec: AgentSpec, obs: ObservationMatrix, action: np.ndarray) -> np.ndarray:
        action = np.asarray(action, dtype=np.float64)
        expected = self.expected_action_shape(spec, obs)
        if action.shape != expected:
            raise ContractError(
                f"agent {spec.agent_id} ({spec.name}): expected action shape {expected}, got {action.shape}"
            )
        return action


Policy = Callable[[ObservationMatrix], np.ndarray]


def run_episode(
    env: Environment,
    policies: Mapping[int, Policy],
    seed: int,
    success_spec: SuccessSpec,
    collect_actions: bool = False,
    on_step: Optional[Callable[[Environment, int, StepComponents], None]] = None,
) -> EpisodeResult:
    """Run one full episode and score it.

    Agents with ``action_period`` k are queried only at t = 0, k, 2k, ...;
    the environment keeps their last action's effects in force in between.
    Deterministic given (seed, policies, configuration).
    """
    missing = [s.name for s in env.agent_specs if s.agent_id not in policies]
    if missing:
        raise ContractError(f"no policy supplied for agents: {missing}")

    schema = env.component_schema
    obs = env.reset(seed)
    acc = ComponentAccumulator.zeros(schema)

    action_sums: dict[int, np.ndarray] = {}
    action_counts: dict[int, int] = {}

    termination: Optional[Termination] = None
    t = 0
    while t < env.horizon:
        actions: dict[int, np.ndarray] = {}
        for spec in env.agent_specs:
            if t % spec.action_period != 0:
                continue
            agent_obs = obs[spec.agent_id]
            action = env.validate_action(spec, agent_obs, policies[spec.agent_id](agent_obs))
            actions[spec.agent_id] = action
            if collect_actions and not isinstance(spec.action_kind, IndividualScores):
                prev = action_sums.get(spec.agent_id)
                action_sums[spec.agent_id] = action if prev is None else prev + action
                action_counts[spec.agent_id] = action_counts.get(spec.agent_id, 0) + 1
            elif collect_actions:
                # Individual-score actions are summarized by their mean value.
                summary = np.array([float(action.mean()) if action.size else 0.0])
                prev = action_sums.get(spec.agent_id)
                action_sums[spec.agent_id] = summary if prev is None else prev + summary
                action_counts[spec.agent_id] = action_counts.get(spec.agent_id, 0) + 1
        obs, step_components, termination = env.step(actions)
        accumulate(acc, step_components)
        if on_step is not None:
            on_step(env, t, step_components)
        t += 1
        if termination is not None:
            break

    if termination is None:
        termination = Termination.HORIZON

    totals = total_rewards(acc, schema)
    violations = fairness_violations(acc, schema)
    success = episode_success(totals, violations, success_spec)
    eps_ok = None
    if success_spec.epsilon is not None:
        eps_ok = tuple(abs(f) <= e for f, e in zip(violations, success_spec.epsilon))

    mean_actions = None
    if collect_actions:
        mean_actions = {aid: action_sums[aid] / action_counts[aid] for aid in action_sums}

    return EpisodeResult(
        total_rewards=totals,
        fairness_violations=violations,
        success=success,
        termination=termination,
        steps_run=acc.steps,
        seed=seed,
        zero_rate_flags=frozenset(acc.zero_rate_flags),
        epsilon_satisfied=eps_ok,
        mean_actions=mean_actions,
    )
