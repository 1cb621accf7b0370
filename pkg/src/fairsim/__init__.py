"""Multi-agent social-system simulators with group-fairness accounting.

Three episodic simulators (a loan pipeline, a healthcare system, and an
education-to-employment pipeline) share one contract: agents act on
observation matrices, the environment emits per-step reward and fairness
component vectors, and episodes are scored by a weighted sum of aggregated
rewards and group-disparity penalties.  A cross-entropy-style evolutionary
trainer and an experiment harness (interventions, ablations, frontier
sweeps, baselines) sit on top.
"""

from .core import (
    AgentSpec,
    BudgetTree,
    ComponentAccumulator,
    ComponentSchema,
    Environment,
    EpisodeResult,
    GroupVector,
    IndividualScores,
    ObservationMatrix,
    StepComponents,
    SuccessSpec,
    Termination,
    accumulate,
    episode_success,
    fairness_d_group,
    fairness_two_group,
    fairness_violations,
    run_episode,
    total_rewards,
)
from .config import make_env
from .envs.education import EducationConfig, EducationEnv
from .envs.healthcare import HealthcareConfig, HealthcareEnv
from .envs.loan import LoanConfig, LoanEnv
from .policies import AffinePolicy, PolicyParams
from .populations import AffineScorer, Individual, PopulationConfig, generate_population
from .trainer import TrainConfig, train

__version__ = "0.1.0"
