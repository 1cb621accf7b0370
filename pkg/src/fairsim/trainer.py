"""Evolutionary policy search over concatenated agent parameters.

Training keeps a diagonal Gaussian over the stacked flat parameter vectors
of all agents.  Each epoch samples ``episodes_per_epoch`` candidate vectors,
runs one scored episode per candidate (distinct seeds), ranks candidates by
the episode score, and refits the Gaussian to the elite fraction.  The
returned policy is the final mean.

The evaluator abstraction keeps the optimizer independent of the
simulators: the environment evaluator builds per-agent affine policies from
theta slices and runs an episode, while tests can plug in closed-form
objectives (the planted quadratic below).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .core import Environment, EpisodeResult, SuccessSpec, run_episode
from .policies import AffinePolicy, layout_for

__all__ = [
    "GaussianSearchDist",
    "TrainConfig",
    "EpochStats",
    "TrainResult",
    "EnvEvaluator",
    "QuadraticEvaluator",
    "elite_update",
    "train",
    "FixedLoanBaseline",
    "fixed_loan_policies",
    "grid_search_baseline",
]


@dataclass
class GaussianSearchDist:
    """Mean and per-coordinate variance of the search distribution."""

    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma2 = np.asarray(self.sigma2, dtype=np.float64)
        if self.mu.shape != self.sigma2.shape:
            raise ValueError("mu and sigma2 must have the same shape")
        if np.any(self.sigma2 <= 0):
            raise ValueError("sigma2 must be positive element-wise")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.mu + np.sqrt(self.sigma2) * rng.standard_normal(self.mu.shape[0])


@dataclass
class TrainConfig:
    epochs: int = 40
    episodes_per_epoch: int = 100
    elite_fraction: float = 0.2
    sigma_floor: float = 1e-4
    init_mu: float = 0.0
    init_sigma: float = 1.0
    seed: int = 0
    trainable_agents: Optional[tuple[int, ...]] = None  # None = all agents train
    episodes_per_sample: int = 1  # >1 averages the score over extra seeds

    def __post_init__(self) -> None:
        if not 0 < self.elite_fraction <= 1:
            raise ValueError("elite_fraction must lie in (0, 1]")
        if self.episodes_per_epoch < 1 or self.epochs < 1:
            raise ValueError("epochs and episodes_per_epoch must be >= 1")
        if self.episodes_per_epoch * self.elite_fraction < 1:
            raise ValueError("episodes_per_epoch too small for the elite fraction")


def elite_update(
    samples: np.ndarray,
    successes: np.ndarray,
    elite_fraction: float,
    sigma_floor: float = 1e-4,
) -> tuple[np.ndarray, np.ndarray]:
    """Refit (mu, sigma2) to the top-scoring samples.

    Elite size is ceil(p * E).  Ties and ordering are resolved by sample
    index, so the update is deterministic for any input order.  sigma2 is
    the population variance of the elite, floored element-wise.
    """
    samples = np.asarray(samples, dtype=np.float64)
    successes = np.asarray(successes, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] != successes.shape[0] or samples.shape[0] == 0:
        raise ValueError("need a non-empty (E, dim) sample matrix with one success per row")
    n_elite = int(np.ceil(elite_fraction * samples.shape[0]))
    order = np.lexsort((np.arange(samples.shape[0]), -successes))
    elite = samples[order[:n_elite]]
    mu = elite.mean(axis=0)
    sigma2 = np.maximum(elite.var(axis=0), sigma_floor)
    return mu, sigma2


class Evaluator(Protocol):
    """Maps a candidate parameter vector and seed to an episode score."""

    param_count: int

    def evaluate(self, theta: np.ndarray, seed: int) -> "EvalOutcome": ...


@dataclass
class EvalOutcome:
    success: float
    rewards: Optional[np.ndarray] = None
    violations: Optional[np.ndarray] = None
    mean_actions: Optional[dict[int, np.ndarray]] = None


class EnvEvaluator:
    """Runs one scored episode per candidate vector.

    ``frozen_policies`` maps agent ids to fixed policy callables; those
    agents keep their parameters out of the search vector entirely when
    listed in neither ``trainable`` nor the theta slicing.
    """

    def __init__(
        self,
        env_factory: Callable[[], Environment],
        success_spec: Optional[SuccessSpec] = None,
        collect_actions: bool = False,
        fixed_policy_factories: Optional[dict[int, Callable[[int], Callable]]] = None,
    ):
        self.env_factory = env_factory
        self._template = env_factory()
        self.success_spec = success_spec or self._template.default_success_spec()
        self.collect_actions = collect_actions
        self.fixed_policy_factories = fixed_policy_factories or {}
        self.slices: dict[int, slice] = {}
        offset = 0
        for spec in self._template.agent_specs:
            count = layout_for(spec).param_count
            self.slices[spec.agent_id] = slice(offset, offset + count)
            offset += count
        self.param_count = offset
        self.agent_ids = tuple(spec.agent_id for spec in self._template.agent_specs)

    def frozen_mask(self) -> np.ndarray:
        """Boolean parameter mask covering the fixed (non-learning) agents."""
        mask = np.zeros(self.param_count, dtype=bool)
        for aid in self.fixed_policy_factories:
            mask[self.slices[aid]] = True
        return mask

    def policies_from(self, theta: np.ndarray, seed: int = 0) -> dict[int, Callable]:
        policies: dict[int, Callable] = {}
        for spec in self._template.agent_specs:
            if spec.agent_id in self.fixed_policy_factories:
                policies[spec.agent_id] = self.fixed_policy_factories[spec.agent_id](seed)
            else:
                policies[spec.agent_id] = AffinePolicy.from_theta(spec, theta[self.slices[spec.agent_id]])
        return policies

    def evaluate(self, theta: np.ndarray, seed: int) -> EvalOutcome:
        result = self.run_result(theta, seed)
        return EvalOutcome(
            success=result.success,
            rewards=result.total_rewards,
            violations=result.fairness_violations,
            mean_actions=result.mean_actions,
        )

    def run_result(self, theta: np.ndarray, seed: int) -> EpisodeResult:
        env = self.env_factory()
        return run_episode(
            env, self.policies_from(theta, seed), seed, self.success_spec, collect_actions=self.collect_actions
        )


class QuadraticEvaluator:
    """Planted deterministic objective -(theta - optimum)^2, for sanity checks."""

    def __init__(self, optimum: np.ndarray):
        self.optimum = np.asarray(optimum, dtype=np.float64)
        self.param_count = self.optimum.shape[0]

    def evaluate(self, theta: np.ndarray, seed: int) -> EvalOutcome:
        return EvalOutcome(success=-float(np.sum((theta - self.optimum) ** 2)))


@dataclass
class EpochStats:
    epoch: int
    mean_success: float
    max_success: float
    elite_mean_success: float
    mean_rewards: Optional[list[float]] = None
    mean_violations: Optional[list[float]] = None
    mean_actions: Optional[dict[int, list[float]]] = None

    def to_json_line(self) -> str:
        record = {
            "epoch": self.epoch,
            "mean_success": self.mean_success,
            "max_success": self.max_success,
            "elite_mean_success": self.elite_mean_success,
        }
        if self.mean_rewards is not None:
            record["mean_rewards"] = self.mean_rewards
        if self.mean_violations is not None:
            record["mean_violations"] = self.mean_violations
        if self.mean_actions is not None:
            record["mean_actions"] = {str(k): v for k, v in self.mean_actions.items()}
        return json.dumps(record)


@dataclass
class TrainResult:
    theta: np.ndarray
    distribution: GaussianSearchDist
    history: list[EpochStats]


def train(
    evaluator: Evaluator,
    cfg: TrainConfig,
    frozen_theta: Optional[np.ndarray] = None,
    frozen_coords: Optional[np.ndarray] = None,
    checkpoint_dir: Optional[str] = None,
) -> TrainResult:
    """Iterate sample / evaluate / elite-refit for cfg.epochs epochs.

    ``frozen_coords`` is a boolean mask over the parameter vector; frozen
    coordinates are overwritten with ``frozen_theta`` before every
    evaluation and therefore stay bit-identical across epochs (single-agent
    training freezes the other agents' slices).
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    dim = evaluator.param_count
    mu = np.full(dim, cfg.init_mu, dtype=np.float64)
    sigma2 = np.full(dim, cfg.init_sigma**2, dtype=np.float64)
    if frozen_coords is not None:
        frozen_coords = np.asarray(frozen_coords, dtype=bool)
        if frozen_theta is None:
            raise ValueError("frozen_coords requires frozen_theta")
        mu[frozen_coords] = frozen_theta[frozen_coords]

    dist = GaussianSearchDist(mu=mu, sigma2=sigma2)
    history: list[EpochStats] = []
    episode_seed = 0

    for epoch in range(cfg.epochs):
        samples = np.empty((cfg.episodes_per_epoch, dim))
        successes = np.empty(cfg.episodes_per_epoch)
        rewards_acc: list[np.ndarray] = []
        violations_acc: list[np.ndarray] = []
        actions_acc: dict[int, list[np.ndarray]] = {}

        for e in range(cfg.episodes_per_epoch):
            theta = dist.sample(rng)
            if frozen_coords is not None:
                theta[frozen_coords] = frozen_theta[frozen_coords]
            samples[e] = theta
            score = 0.0
            for _ in range(cfg.episodes_per_sample):
                outcome = evaluator.evaluate(theta, episode_seed)
                episode_seed += 1
                score += outcome.success
            successes[e] = score / cfg.episodes_per_sample
            if outcome.rewards is not None:
                rewards_acc.append(outcome.rewards)
                violations_acc.append(outcome.violations)
            if outcome.mean_actions is not None:
                for aid, act in outcome.mean_actions.items():
                    actions_acc.setdefault(aid, []).append(act)

        new_mu, new_sigma2 = elite_update(samples, successes, cfg.elite_fraction, cfg.sigma_floor)
        if frozen_coords is not None:
            new_mu[frozen_coords] = frozen_theta[frozen_coords]
        dist = GaussianSearchDist(mu=new_mu, sigma2=new_sigma2)

        n_elite = int(np.ceil(cfg.elite_fraction * cfg.episodes_per_epoch))
        order = np.lexsort((np.arange(cfg.episodes_per_epoch), -successes))
        stats = EpochStats(
            epoch=epoch,
            mean_success=float(successes.mean()),
            max_success=float(successes.max()),
            elite_mean_success=float(successes[order[:n_elite]].mean()),
            mean_rewards=[float(v) for v in np.mean(rewards_acc, axis=0)] if rewards_acc else None,
            mean_violations=[float(v) for v in np.mean(violations_acc, axis=0)] if violations_acc else None,
            mean_actions={aid: [float(v) for v in np.mean(acts, axis=0)] for aid, acts in actions_acc.items()}
            if actions_acc
            else None,
        )
        history.append(stats)
        if checkpoint_dir is not None:
            _write_checkpoint(checkpoint_dir, epoch, dist, cfg)

    return TrainResult(theta=dist.mu.copy(), distribution=dist, history=history)


def _write_checkpoint(directory: str, epoch: int, dist: GaussianSearchDist, cfg: TrainConfig) -> None:
    import os

    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"checkpoint_epoch_{epoch:04d}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "epoch": epoch,
                "mu": dist.mu.tolist(),
                "sigma2": dist.sigma2.tolist(),
                "elite_fraction": cfg.elite_fraction,
                "seed": cfg.seed,
            },
            fh,
        )


def load_checkpoint(path: str) -> tuple[int, GaussianSearchDist]:
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    return record["epoch"], GaussianSearchDist(
        mu=np.asarray(record["mu"]), sigma2=np.asarray(record["sigma2"])
    )


# ---------------------------------------------------------------------------
# Loan baselines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedLoanBaseline:
    """Anchor actions for the non-learning loan baseline.

    Thresholds of (0, 0) admit every applicant; the per-group relief factors
    (0.12, 0.18) give the disadvantaged group slightly stronger support; the
    disbursement queue is ordered uniformly at random, which equalizes
    expected wait times across groups.
    """

    thresholds: tuple[float, float] = (0.0, 0.0)
    debt_factors: tuple[float, float] = (0.12, 0.18)


def fixed_loan_policies(baseline: FixedLoanBaseline, seed: int):
    """Policy dict for the loan env's three agents under the fixed baseline."""
    from .envs import loan
    from .policies import ConstantPolicy, RandomScorePolicy

    return {
        loan.ADMISSIONS: ConstantPolicy(np.asarray(baseline.thresholds)),
        loan.DISBURSEMENT: RandomScorePolicy(seed),
        loan.DEBT: ConstantPolicy(np.asarray(baseline.debt_factors)),
    }


def grid_search_baseline(
    objective: Callable[[tuple[float, float], tuple[float, float], int], float],
    seeds: Sequence[int],
    resolution: int = 5,
    deviations: Sequence[float] = (-0.1, -0.05, 0.0, 0.05, 0.1),
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Two-tier grid search over (thresholds, debt factors).

    Tier 1 scans a shared (threshold, debt) pair over a uniform partition of
    [0, 1]^2; tier 2 scans per-group deviations from the tier-1 optimum,
    thresholds first, then debt factors.  ``objective`` maps (thresholds,
    debt_factors, seed) to a score; the mean over ``seeds`` is maximized and
    ties resolve to the earliest point in iteration order.
    """
    grid = np.linspace(0.0, 1.0, resolution) if resolution > 1 else np.array([0.0])

    def mean_score(thresholds, debts) -> float:
        return float(np.mean([objective(thresholds, debts, s) for s in seeds]))

    best_pair, best_val = None, -np.inf
    for thr in grid:
        for debt in grid:
            val = mean_score((thr, thr), (debt, debt))
            if val > best_val:
                best_pair, best_val = (float(thr), float(debt)), val
    thr0, debt0 = best_pair

    def clip01(x: float) -> float:
        return min(max(x, 0.0), 1.0)

    best_thr, best_val = (thr0, thr0), -np.inf
    for d0 in deviations:
        for d1 in deviations:
            cand = (clip01(thr0 + d0), clip01(thr0 + d1))
            val = mean_score(cand, (debt0, debt0))
            if val > best_val:
                best_thr, best_val = cand, val

    best_debt, best_val = (debt0, debt0), -np.inf
    for d0 in deviations:
        for d1 in deviations:
            cand = (clip01(debt0 + d0), clip01(debt0 + d1))
            val = mean_score(best_thr, cand)
            if val > best_val:
                best_debt, best_val = cand, val

    return best_thr, best_debt
