"""Experiment suites: interventions, ablations, frontier sweeps, baselines.

Every suite writes plot-ready data only (CSV for time series and tables,
JSON-lines for episodes and training curves); rendering is out of scope.

Intervention runs are seed-paired: the baseline and intervened arms share
one seed, and the intervened arm differs from the baseline only through the
catalog entry's mechanism (a config switch or a single agent's fixed
action).  Environments draw each stochastic mechanism from its own named
stream, so an override never disturbs the random draws of untouched
mechanisms.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .config import ConfigError, apply_overrides, default_config, make_env
from .core import Environment, SuccessSpec, run_episode
from .envs import education, healthcare, loan
from .policies import ConstantFillPolicy, ConstantPolicy, RandomScorePolicy
from .trainer import EnvEvaluator, FixedLoanBaseline, TrainConfig, TrainResult, train

__all__ = [
    "INTERVENTIONS",
    "InterventionSpec",
    "baseline_policies",
    "run_intervention",
    "run_ablation",
    "ablation_success_spec",
    "run_frontier",
    "run_baselines",
    "export_actions",
    "max_workers",
]


def max_workers() -> int:
    """Parallel fan-out width, capped by the MAFE_THREADS environment variable."""
    raw = os.environ.get("MAFE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fanout(fn: Callable[[Any], Any], items: Sequence[Any]) -> list[Any]:
    workers = max_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Fixed baseline behaviors per environment
# ---------------------------------------------------------------------------


def _uniform_tree(block_sizes: Sequence[int]) -> np.ndarray:
    return np.concatenate([np.full(size, 1.0 / size) for size in block_sizes])


def _tree_with_root(root: Sequence[float], leaf_blocks: Sequence[int]) -> np.ndarray:
    parts = [np.asarray(root, dtype=np.float64)]
    parts.extend(np.full(size, 1.0 / size) for size in leaf_blocks)
    return np.concatenate(parts)


def baseline_policies(env_name: str, env: Environment, seed: int) -> dict[int, Callable]:
    """Passive, non-learning behaviors used as the control arm.

    Loan: admit everyone, no relief, random queue order.  Healthcare:
    mid-range premiums, random queue, planner banks its whole budget.
    Education: random admissions ranking, even university split, mid-range
    salaries, planner funds universities only.
    """
    if env_name == "loan":
        return {
            loan.ADMISSIONS: ConstantPolicy(np.zeros(env.config.threshold_arity)),
            loan.DISBURSEMENT: RandomScorePolicy(seed ^ 0x5EED),
            loan.DEBT: ConstantPolicy(np.zeros(env.config.debt_arity)),
        }
    if env_name == "healthcare":
        ng = env.config.n_regions
        return {
            healthcare.INSURANCE: ConstantFillPolicy(0.5),
            healthcare.HOSPITAL: RandomScorePolicy(seed ^ 0x5EED),
            healthcare.PLANNER: ConstantPolicy(_tree_with_root([0.0, 0.0, 0.0, 1.0], [ng, ng, ng])),
        }
    if env_name == "education":
        ng = env.config.n_regions
        return {
            education.ADMISSIONS: RandomScorePolicy(seed ^ 0x5EED),
            # No infrastructure purchases: every unit adds recurring payroll,
            # so a passive university banks rollover instead.
            education.UNIVERSITY_BUDGET: ConstantPolicy(np.array([0.0, 0.3, 0.08, 0.1, 0.52])),
            education.EMPLOYER: ConstantFillPolicy(0.5),
            education.PLANNER: ConstantPolicy(_tree_with_root([0.0, 1.0, 0.0], [ng])),
        }
    raise ConfigError(f"unknown environment {env_name!r}")


# ---------------------------------------------------------------------------
# Intervention catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterventionSpec:
    """One mechanism override, everything else held fixed."""

    name: str
    env_name: str
    indicator: str
    description: str
    config_patch: dict[str, Any] = field(default_factory=dict)
    budget_multiplier: float = 1.0
    policy_patch: Optional[Callable[[Environment, int], dict[int, Callable]]] = None

    @property
    def qualified_name(self) -> str:
        return f"{self.env_name}/{self.name}"


def _planner_all_to(category_index: int, n_categories: int, leaf_blocks: Sequence[int], agent_id: int):
    root = [0.0] * n_categories
    root[category_index] = 1.0

    def patch(env: Environment, seed: int) -> dict[int, Callable]:
        return {agent_id: ConstantPolicy(_tree_with_root(root, leaf_blocks))}

    return patch


def _build_interventions() -> dict[str, InterventionSpec]:
    specs = [
        InterventionSpec(
            name="null",
            env_name="loan",
            indicator="mean_qualification_score",
            description="control of the control: no override at all",
        ),
        InterventionSpec(
            name="debt-relief-20pct",
            env_name="loan",
            indicator="mean_qualification_score",
            description="debt management fixed at 20% installment relief for both groups",
            policy_patch=lambda env, seed: {loan.DEBT: ConstantPolicy(np.full(env.config.debt_arity, 0.2))},
        ),
        InterventionSpec(
            name="beds-unlimited",
            env_name="healthcare",
            indicator="mortality_rate",
            description="every region holds as many beds as the whole population",
            config_patch={"beds_per_region": None},  # filled per-population below
        ),
        InterventionSpec(
            name="universal-insurance",
            env_name="healthcare",
            indicator="mortality_rate",
            description="everyone is insured each step regardless of premium",
            config_patch={"force_insured": True},
        ),
        InterventionSpec(
            name="public-health-max",
            env_name="healthcare",
            indicator="mortality_rate",
            description="10x budget, all of it into public-health investment",
            budget_multiplier=10.0,
            policy_patch=_planner_all_to(1, 4, [4, 4, 4], healthcare.PLANNER),
        ),
        InterventionSpec(
            name="tertiary-max",
            env_name="education",
            indicator="graduation_rate",
            description="10x budget, all of it into tertiary investment",
            budget_multiplier=10.0,
            policy_patch=_planner_all_to(0, 3, [9], education.PLANNER),
        ),
        InterventionSpec(
            name="full-scholarships",
            env_name="education",
            indicator="graduation_rate",
            description="tuition is fully covered for every enrolled student",
            config_patch={"force_full_scholarship": True},
        ),
        InterventionSpec(
            name="mentorship-all",
            env_name="education",
            indicator="disadvantaged_graduation_rate",
            description="every underrepresented student joins the mentorship program",
            config_patch={"force_mentorship_all": True},
        ),
        InterventionSpec(
            name="diversity-max",
            env_name="education",
            indicator="disadvantaged_mean_utility",
            description="10x budget, all of it into employer diversity incentives",
            budget_multiplier=10.0,
            policy_patch=_planner_all_to(2, 3, [9], education.PLANNER),
        ),
    ]
    return {spec.qualified_name: spec for spec in specs}


INTERVENTIONS: dict[str, InterventionSpec] = _build_interventions()


def _drive(env: Environment, policies: dict[int, Callable], seed: int, indicator: str) -> list[float]:
    series: list[float] = []

    def record(e: Environment, t: int, components) -> None:
        series.append(e.indicators[indicator])

    run_episode(env, policies, seed, _neutral_success(env), on_step=record)
    return series


def _neutral_success(env: Environment) -> SuccessSpec:
    return env.default_success_spec()


def run_intervention(
    name: str,
    seeds: Sequence[int],
    config_path: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
    out_path: Optional[str] = None,
) -> dict[int, dict[str, list[float]]]:
    """Paired baseline/intervened indicator series, one pair per seed.

    Returns {seed: {"baseline": series, "intervened": series}} and, when
    ``out_path`` is given, writes a long-format CSV
    (intervention, seed, arm, step, value).
    """
    if name not in INTERVENTIONS:
        raise ConfigError(f"unknown intervention {name!r}; catalog: {sorted(INTERVENTIONS)}")
    spec = INTERVENTIONS[name]

    def build_env(intervened: bool) -> Environment:
        cfg = default_config(spec.env_name)
        if config_path is not None:
            from .config import load_overrides

            cfg = apply_overrides(cfg, load_overrides(config_path).get(spec.env_name, {}))
        if overrides:
            cfg = apply_overrides(cfg, overrides)
        if intervened:
            patch = dict(spec.config_patch)
            if "beds_per_region" in patch and patch["beds_per_region"] is None:
                patch["beds_per_region"] = cfg.population.size
            if spec.budget_multiplier != 1.0:
                patch["planner_budget"] = cfg.planner_budget * spec.budget_multiplier
            cfg = apply_overrides(cfg, patch)
        from .config import _ENV_TYPES

        return _ENV_TYPES[spec.env_name](cfg)

    def one_seed(seed: int) -> tuple[int, dict[str, list[float]]]:
        arms = {}
        for arm, intervened in (("baseline", False), ("intervened", True)):
            env = build_env(intervened)
            policies = baseline_policies(spec.env_name, env, seed)
            if intervened and spec.policy_patch is not None:
                policies.update(spec.policy_patch(env, seed))
            arms[arm] = _drive(env, policies, seed, spec.indicator)
        return seed, arms

    results = dict(_fanout(one_seed, list(seeds)))

    if out_path is not None:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["intervention", "indicator", "seed", "arm", "step", "value"])
            for seed in seeds:
                for arm, series in results[seed].items():
                    for t, value in enumerate(series):
                        writer.writerow([name, spec.indicator, seed, arm, t, value])
    return results


# ---------------------------------------------------------------------------
# Reward-term ablations
# ---------------------------------------------------------------------------

ABLATION_MODES = ("direct", "direct_fair", "direct_fair_rate")


def ablation_success_spec(env: Environment, mode: str) -> SuccessSpec:
    """Uniform weights over the included objective terms, zero elsewhere."""
    if mode not in ABLATION_MODES:
        raise ConfigError(f"unknown ablation mode {mode!r}")
    schema = env.component_schema
    norms = env.default_success_spec().reward_norms
    j, k, m = schema.n_direct, schema.n_rewards, schema.n_fair_measures
    include_rates = mode == "direct_fair_rate"
    include_fair = mode != "direct"
    n_terms = j + (k - j if include_rates else 0) + (m if include_fair else 0)
    w = 1.0 / n_terms
    alpha = tuple(w if (i < j or include_rates) else 0.0 for i in range(k))
    beta = tuple(w if include_fair else 0.0 for _ in range(m))
    return SuccessSpec(alpha=alpha, beta=beta, reward_norms=norms)


def run_ablation(
    env_name: str,
    train_cfg: TrainConfig,
    config_path: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
    out_dir: Optional[str] = None,
) -> dict[str, TrainResult]:
    """Train once per weight configuration; realized values of all term
    categories are tracked in the history regardless of inclusion."""
    results = {}
    for mode in ABLATION_MODES:
        env_factory = lambda: make_env(env_name, config_path, overrides)  # noqa: E731
        evaluator = EnvEvaluator(env_factory, ablation_success_spec(env_factory(), mode))
        results[mode] = train(evaluator, train_cfg)
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            path = os.path.join(out_dir, f"ablation_{env_name}_{mode}.jsonl")
            with open(path, "w", encoding="utf-8") as fh:
                for stats in results[mode].history:
                    fh.write(stats.to_json_line() + "\n")
    return results


# ---------------------------------------------------------------------------
# Pareto frontier sweep
# ---------------------------------------------------------------------------


def run_frontier(
    env_name: str,
    lambdas: Sequence[float],
    seeds: Sequence[int],
    train_cfg: TrainConfig,
    config_path: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
    n_eval_episodes: int = 5,
    out_path: Optional[str] = None,
) -> list[dict[str, float]]:
    """Per lambda: train per seed, evaluate the final policy, average the
    (sum of normalized rewards, sum of fairness violations) pair."""

    def run_point(lam: float) -> dict[str, float]:
        reward_sums, fairness_sums = [], []
        for seed in seeds:
            env_factory = lambda: make_env(env_name, config_path, overrides)  # noqa: E731
            spec = env_factory().default_success_spec(lam=lam)
            evaluator = EnvEvaluator(env_factory, spec)
            outcome = train(evaluator, replace(train_cfg, seed=seed))
            for i in range(n_eval_episodes):
                result = evaluator.run_result(outcome.theta, seed=1_000_000 + 97 * seed + i)
                normalized = np.asarray(result.total_rewards) / np.asarray(spec.reward_norms)
                reward_sums.append(float(normalized.sum()))
                fairness_sums.append(float(result.fairness_violations.sum()))
        return {
            "lambda": lam,
            "mean_reward": float(np.mean(reward_sums)),
            "mean_fairness": float(np.mean(fairness_sums)),
        }

    points = _fanout(run_point, list(lambdas))
    if out_path is not None:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "mean_reward", "mean_fairness"])
            for point in points:
                writer.writerow([point["lambda"], point["mean_reward"], point["mean_fairness"]])
    return points


# ---------------------------------------------------------------------------
# Loan baselines: fixed policy, single-agent x3, multi-agent
# ---------------------------------------------------------------------------


def run_baselines(
    seeds: Sequence[int],
    train_cfg: TrainConfig,
    config_path: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
    baseline: FixedLoanBaseline = FixedLoanBaseline(),
    out_path: Optional[str] = None,
) -> dict[str, float]:
    """Mean episode score for the five loan training scenarios."""

    env_factory = lambda: make_env("loan", config_path, overrides)  # noqa: E731
    success = env_factory().default_success_spec()

    fixed_factories = {
        loan.ADMISSIONS: lambda seed: ConstantPolicy(np.asarray(baseline.thresholds)),
        loan.DISBURSEMENT: lambda seed: RandomScorePolicy(seed ^ 0x0F1CE),
        loan.DEBT: lambda seed: ConstantPolicy(np.asarray(baseline.debt_factors)),
    }

    results: dict[str, float] = {}

    fixed_scores = []
    for seed in seeds:
        env = env_factory()
        policies = {aid: factory(seed) for aid, factory in fixed_factories.items()}
        fixed_scores.append(run_episode(env, policies, seed, success).success)
    results["fixed"] = float(np.mean(fixed_scores))

    scenario_names = {loan.ADMISSIONS: "single_admissions", loan.DISBURSEMENT: "single_disbursement", loan.DEBT: "single_debt"}
    for trainable in (loan.ADMISSIONS, loan.DISBURSEMENT, loan.DEBT):
        frozen = {aid: factory for aid, factory in fixed_factories.items() if aid != trainable}
        scores = []
        for seed in seeds:
            evaluator = EnvEvaluator(env_factory, success, fixed_policy_factories=frozen)
            outcome = train(
                evaluator,
                replace(train_cfg, seed=seed),
                frozen_theta=np.zeros(evaluator.param_count),
                frozen_coords=evaluator.frozen_mask(),
            )
            scores.append(outcome.history[-1].elite_mean_success)
        results[scenario_names[trainable]] = float(np.mean(scores))

    scores = []
    for seed in seeds:
        evaluator = EnvEvaluator(env_factory, success)
        outcome = train(evaluator, replace(train_cfg, seed=seed))
        scores.append(outcome.history[-1].elite_mean_success)
    results["multi_agent"] = float(np.mean(scores))

    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)
    return results


# ---------------------------------------------------------------------------
# Action export
# ---------------------------------------------------------------------------


def export_actions(result: TrainResult, out_dir: str, env_name: str, agent_names: dict[int, str]) -> list[str]:
    """One CSV per agent: epoch x mean action dimensions."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    agent_ids = sorted({aid for stats in result.history if stats.mean_actions for aid in stats.mean_actions})
    for aid in agent_ids:
        path = os.path.join(out_dir, f"actions_{env_name}_{agent_names.get(aid, str(aid))}.csv")
        rows = [(stats.epoch, stats.mean_actions[aid]) for stats in result.history if stats.mean_actions]
        width = len(rows[0][1])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch"] + [f"dim_{i}" for i in range(width)])
            for epoch, values in rows:
                writer.writerow([epoch] + list(values))
        paths.append(path)
    return paths
