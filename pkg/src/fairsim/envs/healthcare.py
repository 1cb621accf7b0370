"""Healthcare system simulator.

Three agents steer the health of a regionally-divided population:

* insurance - every ``premium_period`` steps, offers each individual a
  premium (a fraction of ``max_premium``); individuals accept with
  probability clip(1 - exp(-income / (effective_premium * family_size)), 0, 1)
  and keep or drop coverage for the whole cycle;
* hospital - every step, scores the queue of ill, unhospitalized
  individuals; each region fills its free beds from the globally sorted
  queue;
* central planner - every ``planner_period`` steps, splits a replenished
  budget (plus rollover) across insurance subsidies, public-health
  investment, and hospital construction, each with per-region shares.

Health states move healthy -> ill -> (cured | deceased).  Illness onset has
probability A*(1-insured) + (B/5)*risk; resolution and mortality follow the
exponential-family curves configured in :class:`TransitionCurve`.  The
deceased are immediately replaced by fresh individuals in the same region,
so the population count is invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from ..core import (
    AgentSpec,
    BudgetTree,
    ComponentSchema,
    ContractError,
    Environment,
    IndividualScores,
    ObservationMatrix,
    StepComponents,
    SuccessSpec,
    Termination,
)
from ..populations import AffineScorer, FeatureDist, Individual, PopulationConfig, generate_population, resample_individual
from .base import ColumnStore, ObservationBuilder, StreamFamily, check_simplex_blocks, require_action

__all__ = [
    "HealthcareConfig",
    "HealthcareEnv",
    "TransitionCurve",
    "resolution_probabilities",
    "acceptance_probability",
    "subsidy_weights",
    "improvement_probability",
    "default_healthcare_population",
]

INSURANCE, HOSPITAL, PLANNER = 0, 1, 2

HEALTHY, ILL = 0, 1


@dataclass(frozen=True)
class TransitionCurve:
    """clip(offset + sign * base^(e_ill*ILLTIME + e_wait*WAITBED + e_health*HEALTH + const), 0, 1).

    The printed form of the illness curves uses a negative base for the
    mortality branch, which has no real-valued power; this keeps |base| and
    an explicit sign/offset so every reading stays expressible in config.
    """

    offset: float
    base: float
    sign: float = 1.0
    e_ill: float = 0.0
    e_wait: float = 0.0
    e_health: float = 0.0
    const: float = 0.0

    def probability(self, illtime: np.ndarray, waitbed: np.ndarray, health: np.ndarray) -> np.ndarray:
        exponent = self.e_ill * illtime + self.e_wait * waitbed + self.e_health * health + self.const
        with np.errstate(over="ignore"):
            value = self.offset + self.sign * np.power(self.base, exponent)
        return np.clip(value, 0.0, 1.0)


def resolution_probabilities(
    terminate_curve: TransitionCurve,
    mortality_curve: TransitionCurve,
    illtime: np.ndarray,
    waitbed: np.ndarray,
    health: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P_terminate, P_death, P_cured) for ill individuals.

    Death is terminate * mortality and cure is its complement within
    termination, mirroring the two-stage draw (terminate first, then
    mortality versus recovery).  The returned terminate entry is
    re-expressed as death + cured, so the partition identity holds
    bitwise in the reported triple (the re-expression is at most one ulp
    from the raw curve value).
    """
    p_term = terminate_curve.probability(illtime, waitbed, health)
    p_death = p_term * mortality_curve.probability(illtime, waitbed, health)
    p_cured = p_term - p_death
    return p_death + p_cured, p_death, p_cured


def acceptance_probability(income: np.ndarray, premium: np.ndarray, family_size: np.ndarray) -> np.ndarray:
    """Bernoulli parameter for taking coverage; free coverage is always taken."""
    income = np.asarray(income, dtype=np.float64)
    premium = np.asarray(premium, dtype=np.float64)
    family_size = np.asarray(family_size, dtype=np.float64)
    out = np.ones(np.broadcast(income, premium, family_size).shape)
    paying = premium > 0
    ratio = np.divide(income, premium * family_size, out=np.zeros_like(out), where=paying)
    out[paying] = np.clip(1.0 - np.exp(-ratio[paying]), 0.0, 1.0)
    return out


def subsidy_weights(incomes: np.ndarray, floor: float = 1.0) -> np.ndarray:
    """Shares proportional to 1/income, floored so zero incomes stay finite."""
    inv = 1.0 / np.maximum(np.asarray(incomes, dtype=np.float64), floor)
    total = inv.sum()
    return inv / total if total > 0 else inv


def improvement_probability(x: np.ndarray, q: float, r: float, v: float, w: float) -> np.ndarray:
    """Q + R * sigmoid(V*x + W): response of feature drift to regional spend."""
    z = v * np.asarray(x, dtype=np.float64) + w
    sig = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    return q + r * sig


_DISTRESS = ("AEFFORT", "ANERVOUS", "ARESTLESS", "AHOPELESS", "ASAD", "AWORTHLESS")


def default_healthcare_population(size: int = 500, seed: int = 0) -> PopulationConfig:
    """Four regions ordered from best-resourced (0) to least (3)."""

    def spread(values, std, lo, hi):
        return tuple(FeatureDist(v, std, lo, hi) for v in values)

    dists = {
        "FTOTVAL": spread((4000, 3000, 2200, 1600), 1200, 300, 20000),
        "INCTOT": spread((2600, 2000, 1500, 1100), 900, 100, 15000),
        "FAMSIZE": spread((2.2, 2.6, 3.0, 3.4), 1.0, 1, 8),
        "AGE": spread((45, 45, 45, 45), 16, 18, 90),
        "SEX": spread((0.5, 0.5, 0.5, 0.5), 0.5, 0, 1),
        "EDUC": spread((14, 13, 12.5, 11.5), 2.5, 6, 20),
        "USBORN": spread((0.92, 0.9, 0.85, 0.8), 0.3, 0, 1),
        "SMOKENOW": spread((0.15, 0.2, 0.25, 0.3), 0.4, 0, 1),
        "CHOLHIGHEV": spread((0.3, 0.33, 0.36, 0.4), 0.4, 0, 1),
        "POVLEV": spread((300, 220, 160, 110), 80, 0, 600),
    }
    for name in _DISTRESS:
        dists[name] = spread((1.5, 1.8, 2.1, 2.5), 0.8, 1, 5)
    return PopulationConfig(
        size=size,
        n_groups=4,
        group_proportions=(0.25, 0.25, 0.25, 0.25),
        seed=seed,
        feature_dists=dists,
        n_regions=4,
        region_feature="REGION",
        region_mode="group",
    )


def default_health_risk_scorer() -> AffineScorer:
    weights = {"AGE": 0.02, "SMOKENOW": 0.8, "POVLEV": -0.001, "CHOLHIGHEV": 0.5}
    weights.update({name: 0.1 for name in _DISTRESS})
    return AffineScorer(weights=weights, bias=0.8, transform="clip", clip_lo=1.0, clip_hi=5.0)


@dataclass
class HealthcareConfig:
    horizon: int = 100
    discount: float = 1.0
    population: PopulationConfig = field(default_factory=default_healthcare_population)
    n_regions: int = 4
    premium_period: int = 6
    planner_period: int = 6
    max_premium: float = 1000.0
    hospital_cost: float = 2000.0  # insurer's cost per insured occupied bed-step
    beds_per_region: int = 10
    sick_insured_coeff: float = 0.4  # A
    sick_health_coeff: float = 0.4  # B; P_sick = A*(1-insured) + (B/5)*health
    terminate_curve: TransitionCurve = field(
        default_factory=lambda: TransitionCurve(offset=0.0, base=1.03, sign=1.0, e_ill=-7.0)
    )
    mortality_curve: TransitionCurve = field(
        default_factory=lambda: TransitionCurve(offset=-1.96, base=1.02, sign=1.0, e_ill=3.0, e_wait=3.0, e_health=3.0, const=-7.0)
    )
    planner_budget: float = 2.5e8
    infra_base_cost: float = 3e7
    infra_cost_per_bed: float = 1e6
    build_base_time: float = 0.5
    build_time_per_bed: float = 2.0
    improve_q: float = 0.29
    improve_r: float = 0.4
    improve_v: Optional[float] = None  # defaults to 16 * n_regions / planner_budget
    improve_w: float = -4.0
    improve_u: float = 0.2  # probability a feature set stays unchanged
    improve_deltas: dict[str, tuple[float, float, float]] = field(
        default_factory=lambda: {
            **{name: (-0.02, 1.0, 5.0) for name in _DISTRESS},
            "FTOTVAL": (60.0, 300.0, 20000.0),
            "INCTOT": (40.0, 100.0, 15000.0),
            "POVLEV": (4.0, 0.0, 600.0),
        }
    )
    income_floor: float = 1.0
    force_insured: bool = False  # universal-coverage intervention hook
    health_risk_scorer: AffineScorer = field(default_factory=default_health_risk_scorer)
    reward_norms: tuple[float, ...] = (7.2e8, 1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if self.premium_period < 1 or self.planner_period < 1:
            raise ValueError("action periods must be >= 1")
        if not 0 <= self.improve_u <= 1:
            raise ValueError("improve_u must lie in [0, 1]")

    @property
    def effective_improve_v(self) -> float:
        if self.improve_v is not None:
            return self.improve_v
        return 16.0 * self.n_regions / self.planner_budget


def _healthcare_schema(n_regions: int) -> ComponentSchema:
    return ComponentSchema(
        n_direct=1,
        n_rate=3,
        n_fair_measures=3,
        n_groups=n_regions,
        direct_labels=("insurer_profit",),
        rate_labels=("insured_rate", "incidence_rate", "mortality_rate"),
        rate_signs=(1, -1, -1),
        fairness_labels=("insured_rate", "incidence_rate", "mortality_rate"),
        fairness_norms=("none", "none", "none"),
    )


class HealthcareEnv(Environment):
    """See module docstring.  Action periods default to (6, 1, 6)."""

    STREAMS = ("population", "acceptance", "sickness", "resolution", "mortality", "improvement", "replacement")

    def __init__(self, config: Optional[HealthcareConfig] = None, population: Optional[list[Individual]] = None):
        self.config = config or HealthcareConfig()
        ng = self.config.n_regions
        self.component_schema = _healthcare_schema(ng)
        self.horizon = self.config.horizon
        self.discount = self.config.discount
        self._explicit_population = population
        self.agent_specs = (
            AgentSpec(
                agent_id=INSURANCE,
                name="insurance",
                obs_feature_ids=("HEALTH", "FTOTVAL", "FAMSIZE", "REGION", "HICOV"),
                action_kind=IndividualScores(),
                action_period=self.config.premium_period,
            ),
            AgentSpec(
                agent_id=HOSPITAL,
                name="hospital",
                obs_feature_ids=("HEALTH", "ILLTIME", "WAITBED", "AGE"),
                action_kind=IndividualScores(),
            ),
            AgentSpec(
                agent_id=PLANNER,
                name="central_planner",
                obs_feature_ids=("HEALTH", "HICOV", "FTOTVAL", "REGION", "NEEDBED"),
                action_kind=BudgetTree((4, ng, ng, ng)),
                action_period=self.config.planner_period,
            ),
        )

    # ------------------------------------------------------------------

    def reset(self, seed: int) -> dict[int, ObservationMatrix]:
        cfg = self.config
        self._streams = StreamFamily(seed, self.STREAMS)
        if self._explicit_population is not None:
            individuals = self._explicit_population
        else:
            pop_seed = int(self._streams["population"].integers(0, 2**31 - 1))
            individuals = generate_population(replace(cfg.population, seed=pop_seed))
        self._pop_cfg = cfg.population

        names = list(cfg.population.feature_dists) + ["REGION"]
        available = [n for n in dict.fromkeys(names) if n in individuals[0].features]
        self._store = ColumnStore(individuals, available)
        n = self._store.size
        self._region = self._store["REGION"].astype(np.int64) if "REGION" in self._store.columns else self._store.group
        self._next_id = int(self._store.ids.max()) + 1 if n else 0

        self.t = 0
        self._status = np.full(n, HEALTHY, dtype=np.int64)
        self._illtime = np.zeros(n, dtype=np.int64)
        self._waitbed = np.zeros(n, dtype=np.int64)
        self._in_hosp = np.zeros(n, dtype=bool)
        self._onset_step = np.full(n, -1, dtype=np.int64)
        self._insured = np.zeros(n, dtype=bool)
        self._premium = np.zeros(n)
        self._beds = np.full(cfg.n_regions, cfg.beds_per_region, dtype=np.int64)
        self._pending_projects: list[list] = []  # [region, beds, remaining_steps]
        self._rollover = 0.0
        self._subsidy_per_step = np.zeros(cfg.n_regions)
        self._health_spend_per_step = np.zeros(cfg.n_regions)
        self._cumulative_profit = 0.0
        self._cum_deaths = 0
        self._cum_terminations = 0
        self._health = self._risk_scores()

        self._obs_builder = ObservationBuilder()
        self._obs_builder.capture(self._derived_columns(np.arange(n)))
        return self._build_observations()

    def _risk_scores(self) -> np.ndarray:
        return self.config.health_risk_scorer.score_columns(self._store.columns)

    def _derived_columns(self, idx: np.ndarray) -> dict[str, np.ndarray]:
        return {
            "HEALTH": self._health[idx],
            "FTOTVAL": self._store["FTOTVAL"][idx],
            "FAMSIZE": self._store["FAMSIZE"][idx],
            "REGION": self._region[idx].astype(np.float64),
            "HICOV": self._insured[idx].astype(np.float64),
            "ILLTIME": self._illtime[idx].astype(np.float64),
            "WAITBED": self._waitbed[idx].astype(np.float64),
            "AGE": self._store["AGE"][idx],
            "NEEDBED": ((self._status[idx] == ILL) & ~self._in_hosp[idx]).astype(np.float64),
        }

    def _build_observations(self) -> dict[int, ObservationMatrix]:
        everyone = np.arange(self._store.size)
        self._queue_ids = np.flatnonzero((self._status == ILL) & ~self._in_hosp)
        index_sets = {INSURANCE: everyone, HOSPITAL: self._queue_ids, PLANNER: everyone}
        obs = {}
        for spec in self.agent_specs:
            idx = index_sets[spec.agent_id]
            obs[spec.agent_id] = self._obs_builder.build(
                spec.obs_feature_ids, self._derived_columns(idx), self._store.ids[idx]
            )
        return obs

    # ------------------------------------------------------------------

    def step(self, actions: Mapping[int, np.ndarray]):
        cfg = self.config
        ng = cfg.n_regions
        unexpected = set(actions) - {INSURANCE, HOSPITAL, PLANNER}
        if unexpected:
            raise ContractError(f"unexpected agent ids in actions: {sorted(unexpected)}")

        healthy_at_start = np.bincount(self._region[self._status == HEALTHY], minlength=ng).astype(np.float64)

        # 1. Construction ticks first, so a project queued this step waits
        # its full build time; then the planner allocates (new subsidies
        # apply to this step's offers).
        self._advance_projects()
        if self.t % cfg.planner_period == 0:
            tree = require_action(actions, PLANNER, "central_planner", 4 + 3 * ng)
            check_simplex_blocks(tree, (4, ng, ng, ng), "central_planner")
            self._allocate_budget(tree)
        elif PLANNER in actions:
            raise ContractError("central_planner acted outside its period")

        # 2. Premium offers and coverage decisions.
        if self.t % cfg.premium_period == 0:
            offers = require_action(actions, INSURANCE, "insurance", self._store.size)
            self._premium = offers * cfg.max_premium
            subsidies = self._individual_subsidies()
            effective = np.maximum(0.0, self._premium - subsidies)
            if cfg.force_insured:
                self._insured = np.ones(self._store.size, dtype=bool)
            else:
                p = acceptance_probability(self._store["FTOTVAL"], effective, self._store["FAMSIZE"])
                draws = self._streams.random("acceptance", self._store.size)
                self._insured = draws < p
        elif INSURANCE in actions:
            raise ContractError("insurance acted outside its period")

        # 3. Public-health feature drift, then refresh risk scores.
        self._public_health_update()
        self._health = self._risk_scores()

        # 4. Illness clock, new onsets (no resolution in the onset step).
        ill = self._status == ILL
        self._illtime[ill] += 1
        healthy_idx = np.flatnonzero(self._status == HEALTHY)
        p_sick = cfg.sick_insured_coeff * (1.0 - self._insured[healthy_idx]) + (
            cfg.sick_health_coeff / 5.0
        ) * self._health[healthy_idx]
        onset_draws = self._streams.random("sickness", len(healthy_idx))
        new_ill = healthy_idx[onset_draws < np.clip(p_sick, 0.0, 1.0)]
        self._status[new_ill] = ILL
        self._illtime[new_ill] = 0
        self._waitbed[new_ill] = 0
        self._onset_step[new_ill] = self.t
        new_sick_by_region = np.bincount(self._region[new_ill], minlength=ng).astype(np.float64)

        # 5. Hospital allocation over the queue the agent observed.
        scores = require_action(actions, HOSPITAL, "hospital", len(self._queue_ids))
        self._allocate_beds(scores)
        waiting = (self._status == ILL) & ~self._in_hosp & (self._onset_step < self.t)
        self._waitbed[waiting] += 1

        # 6. Illness resolution (only after at least one full step of illness).
        deaths_by_region, terms_by_region = self._resolve_illnesses()

        # 7. Insurer accounting.
        premiums_collected = float(self._premium[self._insured].sum())
        hospital_costs = cfg.hospital_cost * float(np.count_nonzero(self._insured & self._in_hosp))
        profit = premiums_collected - hospital_costs
        self._cumulative_profit += profit

        insured_by_region = np.bincount(self._region[self._insured], minlength=ng).astype(np.float64)
        pop_by_region = np.bincount(self._region, minlength=ng).astype(np.float64)

        fairness = np.empty(6 * ng)
        for g in range(ng):
            fairness[2 * g] = insured_by_region[g]
            fairness[2 * g + 1] = pop_by_region[g]
            fairness[2 * ng + 2 * g] = new_sick_by_region[g]
            fairness[2 * ng + 2 * g + 1] = healthy_at_start[g]
            fairness[4 * ng + 2 * g] = deaths_by_region[g]
            fairness[4 * ng + 2 * g + 1] = terms_by_region[g]

        components = StepComponents(
            reward_components=np.array(
                [
                    profit,
                    insured_by_region.sum(),
                    new_sick_by_region.sum(),
                    deaths_by_region.sum(),
                    pop_by_region.sum(),
                    healthy_at_start.sum(),
                    terms_by_region.sum(),
                ]
            ),
            fairness_components=fairness,
            t=self.t,
        )

        termination = None
        if self._cumulative_profit < 0:
            termination = Termination.FINANCIAL_FAILURE
        if not np.any(self._status == HEALTHY) and not np.any(self._status == ILL):
            termination = Termination.POPULATION_DEPLETED

        self.t += 1
        return self._build_observations(), components, termination

    # ------------------------------------------------------------------

    def _allocate_budget(self, tree: np.ndarray) -> None:
        cfg = self.config
        ng = cfg.n_regions
        budget = cfg.planner_budget + self._rollover
        root = tree[:4]
        subsidy_leaves = tree[4 : 4 + ng]
        health_leaves = tree[4 + ng : 4 + 2 * ng]
        infra_leaves = tree[4 + 2 * ng : 4 + 3 * ng]

        subsidy_amount = budget * root[0] * subsidy_leaves
        health_amount = budget * root[1] * health_leaves
        infra_amount = budget * root[2] * infra_leaves
        self._rollover = budget * root[3]
        self.last_allocation = {
            "budget": budget,
            "subsidies": float(subsidy_amount.sum()),
            "public_health": float(health_amount.sum()),
            "infrastructure": float(infra_amount.sum()),
            "rollover": self._rollover,
        }

        self._subsidy_per_step = subsidy_amount / cfg.planner_period
        self._health_spend_per_step = health_amount / cfg.planner_period

        for region in range(ng):
            spend = infra_amount[region]
            if spend >= cfg.infra_base_cost:
                beds = int(math.floor((spend - cfg.infra_base_cost) / cfg.infra_cost_per_bed))
                if beds >= 1:
                    build_time = int(math.ceil(cfg.build_base_time + cfg.build_time_per_bed * beds))
                    self._pending_projects.append([region, beds, build_time])

    def _advance_projects(self) -> None:
        remaining = []
        for project in self._pending_projects:
            project[2] -= 1
            if project[2] <= 0:
                self._beds[project[0]] += project[1]
            else:
                remaining.append(project)
        self._pending_projects = remaining

    def _individual_subsidies(self) -> np.ndarray:
        out = np.zeros(self._store.size)
        for region in range(self.config.n_regions):
            members = np.flatnonzero(self._region == region)
            if not len(members):
                continue
            weights = subsidy_weights(self._store["FTOTVAL"][members], self.config.income_floor)
            out[members] = weights * self._subsidy_per_step[region]
        return out

    def _public_health_update(self) -> None:
        cfg = self.config
        p_improve = improvement_probability(
            self._health_spend_per_step[self._region], cfg.improve_q, cfg.improve_r, cfg.effective_improve_v, cfg.improve_w
        )
        draws = self._streams.random("improvement", self._store.size)
        improve = draws <= p_improve
        deteriorate = draws > p_improve + cfg.improve_u
        direction = improve.astype(np.float64) - deteriorate.astype(np.float64)
        for name, (delta, lo, hi) in cfg.improve_deltas.items():
            self._store[name] = np.clip(self._store[name] + direction * delta, lo, hi)

    def _allocate_beds(self, scores: np.ndarray) -> None:
        if not len(self._queue_ids):
            return
        order = np.lexsort((self._store.ids[self._queue_ids], -scores))
        ranked = self._queue_ids[order]
        free = self._beds - np.bincount(self._region[self._in_hosp], minlength=self.config.n_regions)
        for i in ranked:
            region = self._region[i]
            if free[region] > 0:
                self._in_hosp[i] = True
                free[region] -= 1

    def _resolve_illnesses(self) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.config
        ng = cfg.n_regions
        deaths = np.zeros(ng)
        terms = np.zeros(ng)
        eligible = np.flatnonzero((self._status == ILL) & (self._illtime >= 1))
        if not len(eligible):
            return deaths, terms

        p_term = cfg.terminate_curve.probability(
            self._illtime[eligible], self._waitbed[eligible], self._health[eligible]
        )
        term_draws = self._streams.random("resolution", len(eligible))
        ended = eligible[term_draws < p_term]
        if not len(ended):
            return deaths, terms

        p_mort = cfg.mortality_curve.probability(self._illtime[ended], self._waitbed[ended], self._health[ended])
        mort_draws = self._streams.random("mortality", len(ended))
        died = ended[mort_draws < p_mort]
        cured = ended[mort_draws >= p_mort]

        np.add.at(terms, self._region[ended], 1.0)
        np.add.at(deaths, self._region[died], 1.0)
        self._cum_terminations += len(ended)
        self._cum_deaths += len(died)

        self._status[cured] = HEALTHY
        self._illtime[cured] = 0
        self._waitbed[cured] = 0
        self._in_hosp[cured] = False
        self._onset_step[cured] = -1

        for i in died:
            self._replace_individual(int(i))
        return deaths, terms

    def _replace_individual(self, i: int) -> None:
        region = int(self._region[i])
        fresh = resample_individual(
            self._pop_cfg, group=region, rng=self._streams["replacement"], new_id=self._next_id, region=region
        )
        self._next_id += 1
        for name in self._store.columns:
            self._store[name][i] = fresh.features.get(name, self._store[name][i])
        self._store.ids[i] = fresh.id
        self._store.group[i] = fresh.group
        self._region[i] = region
        self._status[i] = HEALTHY
        self._illtime[i] = 0
        self._waitbed[i] = 0
        self._in_hosp[i] = False
        self._onset_step[i] = -1
        self._insured[i] = False
        self._premium[i] = 0.0
        self._health[i] = float(
            self.config.health_risk_scorer.score({name: self._store[name][i] for name in self._store.columns})
        )

    # ------------------------------------------------------------------

    @property
    def indicators(self) -> dict[str, float]:
        mortality = self._cum_deaths / self._cum_terminations if self._cum_terminations else 0.0
        return {
            "mortality_rate": mortality,
            "insured_rate": float(self._insured.mean()),
            "ill_fraction": float((self._status == ILL).mean()),
            "mean_health_risk": float(self._health.mean()),
            "cumulative_insurer_profit": self._cumulative_profit,
        }

    def default_success_spec(self, lam: Optional[float] = None) -> SuccessSpec:
        schema = self.component_schema
        if lam is not None:
            return SuccessSpec.from_lambda(lam, schema.n_rewards, schema.n_fair_measures, self.config.reward_norms)
        k, m = schema.n_rewards, schema.n_fair_measures
        w = 1.0 / (k + m)
        return SuccessSpec(alpha=(w,) * k, beta=(w,) * m, reward_norms=self.config.reward_norms)
