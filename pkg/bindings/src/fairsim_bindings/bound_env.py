"""The environment wrapper and space descriptors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Optional

import numpy as np

from fairsim.config import make_env
from fairsim.core import (
    ContractError,
    Environment,
    GroupVector,
    IndividualScores,
    ObservationMatrix,
)

__all__ = ["NO_OP", "SpaceSpec", "BoundEnv", "make"]

#: Sentinel for agents that are not due to act this step.
NO_OP = None


@dataclass(frozen=True)
class SpaceSpec:
    """(shape, low, high, simplex_blocks) description of one agent's spaces.

    ``action_shape`` is (-1,) for individual-score actions, meaning one value
    per observation row; ``simplex_blocks`` is set only for budget-tree
    actions, whose blocks must each sum to one.  ``obs_shape`` is (-1, k):
    the row count follows the cohort the agent currently observes.
    """

    obs_shape: tuple[int, int]
    action_shape: tuple[int, ...]
    low: float
    high: float
    simplex_blocks: Optional[tuple[int, ...]] = None


def _space_for(spec) -> SpaceSpec:
    kind = spec.action_kind
    if isinstance(kind, IndividualScores):
        return SpaceSpec(obs_shape=(-1, spec.obs_width), action_shape=(-1,), low=0.0, high=1.0)
    if isinstance(kind, GroupVector):
        return SpaceSpec(obs_shape=(-1, spec.obs_width), action_shape=(kind.dims,), low=0.0, high=1.0)
    return SpaceSpec(
        obs_shape=(-1, spec.obs_width),
        action_shape=(kind.total_dims,),
        low=0.0,
        high=1.0,
        simplex_blocks=tuple(kind.block_sizes),
    )


class BoundEnv:
    """reset/step facade over one core environment instance.

    Observations are the core :class:`~fairsim.core.ObservationMatrix`
    objects, numerically identical to a native episode with the same seed
    and policies.  ``step`` returns ``(observations, rewards, dones, info)``
    where ``rewards[agent]`` holds the step's raw ``reward_components`` and
    ``fairness_components`` vectors and ``dones["__all__"]`` flags episode
    end.  ``info`` carries the time index and, once finished, the
    termination reason.
    """

    def __init__(self, env: Environment):
        self._env = env
        self.agent_ids = tuple(spec.agent_id for spec in env.agent_specs)
        self.agent_names = {spec.agent_id: spec.name for spec in env.agent_specs}
        self.observation_spaces = {spec.agent_id: _space_for(spec) for spec in env.agent_specs}
        self.action_spaces = self.observation_spaces
        self.horizon = env.horizon
        self._t = 0
        self._done = True

    # ------------------------------------------------------------------

    @property
    def agents_active(self) -> bool:
        return not self._done

    @property
    def acting_agents(self) -> tuple[int, ...]:
        """Agents whose action period divides the upcoming step."""
        return tuple(spec.agent_id for spec in self._env.agent_specs if self._t % spec.action_period == 0)

    def reset(self, seed: int) -> dict[int, ObservationMatrix]:
        """Start a fresh episode; no state survives from previous episodes."""
        self._t = 0
        self._done = self.horizon == 0
        return self._env.reset(seed)

    def step(self, actions: Mapping[int, Any]):
        if self._done:
            raise ContractError("step() called on a finished episode; call reset() first")
        due = set(self.acting_agents)
        filtered: dict[int, np.ndarray] = {}
        for agent_id, action in actions.items():
            if agent_id not in self.agent_names:
                raise ContractError(f"unknown agent id {agent_id}")
            if action is NO_OP:
                if agent_id in due:
                    raise ContractError(f"agent {agent_id} ({self.agent_names[agent_id]}) must act this step")
                continue
            if agent_id not in due:
                raise ContractError(
                    f"agent {agent_id} ({self.agent_names[agent_id]}) is not due at t={self._t}; pass NO_OP or omit it"
                )
            filtered[agent_id] = np.asarray(action, dtype=np.float64)

        observations, components, termination = self._env.step(filtered)
        self._t += 1
        if termination is not None or self._t >= self.horizon:
            self._done = True

        rewards = {
            agent_id: {
                "reward_components": components.reward_components.copy(),
                "fairness_components": components.fairness_components.copy(),
            }
            for agent_id in self.agent_ids
        }
        dones = {agent_id: self._done for agent_id in self.agent_ids}
        dones["__all__"] = self._done
        info = {
            "t": self._t,
            "termination": termination.value if termination is not None else None,
            "acting_agents": self.acting_agents if not self._done else (),
        }
        return observations, rewards, dones, info

    def default_success_spec(self, lam: Optional[float] = None):
        return self._env.default_success_spec(lam=lam)

    @property
    def component_schema(self):
        return self._env.component_schema


def make(env_name: str, config_path: Optional[str] = None, overrides: Optional[dict] = None) -> BoundEnv:
    """Build a bound environment by name ("loan", "healthcare", "education")."""
    return BoundEnv(make_env(env_name, config_path=config_path, overrides=overrides))
