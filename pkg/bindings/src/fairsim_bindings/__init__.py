"""Gym/PettingZoo-style bindings for the fairsim simulators.

The core environments already follow a reset/step discipline; this package
wraps them in the familiar multi-agent RL surface so external MARL
libraries can drive them:

    env = make("loan")
    observations = env.reset(seed=0)
    while env.agents_active:
        actions = {agent: policy(observations[agent]) for agent in env.acting_agents}
        observations, rewards, dones, info = env.step(actions)

``rewards`` carries the raw per-step reward and fairness component vectors
(identical for every agent in the cooperative setting) rather than a
pre-collapsed scalar; callers aggregate them however their algorithm needs.
Agents whose action period has not come up this step must be omitted from
``actions`` or passed the ``NO_OP`` sentinel.
"""

from .bound_env import NO_OP, BoundEnv, SpaceSpec, make

__all__ = ["BoundEnv", "SpaceSpec", "make", "NO_OP"]

__version__ = "0.1.0"
