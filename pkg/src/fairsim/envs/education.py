"""Education-to-employment pipeline simulator.

Four agents shape the path from a tertiary pool through university into the
workforce and back:

* admissions - scores each step's applicant sample; the university admits
  top-down until its 75-students-per-infrastructure-unit capacity is full,
  and rejected applicants enter the workforce directly;
* university budget - splits the university's funds (tuition plus planner
  support plus rollover) across infrastructure, staff salaries,
  scholarships, and a mentorship program for the underrepresented group.
  Salary spend below the faculty payroll ends the episode;
* employer - sets each worker's salary as a fraction of ``max_salary``; the
  per-worker utility is alpha0 + alpha1*(s + div) - alpha2*s^2 with alpha2
  shrinking in GPA, time in university, and mid-career experience;
* central planner - splits a fixed per-step budget across tertiary
  investment (per-region feature drift for the out-of-pipeline population),
  direct university funding, and employer diversity incentives paid out as
  equal salary top-ups to underrepresented workers.

Students' cumulative GPA follows GPA_t = ((t-1) GPA_{t-1} + sem_t)/t where
the semester GPA random-walks from an enrollment anchor built from baseline
merit, scholarship level, and mentorship.  Leaving is a per-step Bernoulli
with logit alpha0 + alpha1*GPA + alpha2*tuition + alpha3*T + alpha4*T^2, and
the time enrolled at departure determines the degree earned.
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
from ..populations import AffineScorer, FeatureDist, Individual, PopulationConfig, generate_population
from .base import ColumnStore, ObservationBuilder, StreamFamily, check_simplex_blocks, require_action
from .healthcare import improvement_probability

__all__ = [
    "EducationConfig",
    "EducationEnv",
    "employer_utility",
    "leave_probability",
    "cumulative_gpa",
    "default_education_population",
]

ADMISSIONS, UNIVERSITY_BUDGET, EMPLOYER, PLANNER = 0, 1, 2, 3

TERTIARY, UNIVERSITY, WORKFORCE = 0, 1, 2

DEGREE_NONE, DEGREE_UNDERGRAD, DEGREE_MASTERS, DEGREE_DOCTORAL = 0, 1, 2, 3


def cumulative_gpa(previous_cum: float, semester: float, t: int) -> float:
    """GPA_t = ((t-1) GPA_{t-1} + sem_t) / t, the running mean of semesters."""
    if t < 1:
        raise ValueError("cumulative GPA is defined for t >= 1")
    return ((t - 1) * previous_cum + semester) / t


def leave_probability(gpa: np.ndarray, tuition: np.ndarray, time_in_univ: np.ndarray, coeffs) -> np.ndarray:
    a0, a1, a2, a3, a4 = coeffs
    z = a0 + a1 * np.asarray(gpa) + a2 * np.asarray(tuition) + a3 * np.asarray(time_in_univ) + a4 * np.asarray(time_in_univ) ** 2
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def employer_utility(
    salary_frac: np.ndarray,
    diversity_frac: np.ndarray,
    gpa: np.ndarray,
    time_in_univ: np.ndarray,
    experience: np.ndarray,
    base_terms: tuple[float, float],
    curvature_terms: tuple[float, float, float, float],
    gpa_scale: float = 4.0,
    univ_time_scale: float = 10.0,
    curvature_floor: float = 1e-3,
) -> np.ndarray:
    """Inverted-quadratic per-worker utility; curvature is floored positive."""
    a0, a1 = base_terms
    b0, b1, b2, b3 = curvature_terms
    exp = np.asarray(experience, dtype=np.float64)
    a2 = b0 + b1 * np.asarray(gpa) / gpa_scale + b2 * np.asarray(time_in_univ) / univ_time_scale + b3 * (exp - exp**2)
    a2 = np.maximum(a2, curvature_floor)
    s = np.asarray(salary_frac, dtype=np.float64)
    return a0 + a1 * (s + np.asarray(diversity_frac)) - a2 * s**2


def default_education_population(size: int = 500, seed: int = 0) -> PopulationConfig:
    return PopulationConfig(
        size=size,
        n_groups=2,
        group_proportions=(0.7, 0.3),
        seed=seed,
        feature_dists={
            "GPA": (FeatureDist(3.0, 0.5, 0.0, 4.0), FeatureDist(2.4, 0.6, 0.0, 4.0)),
            "SEX": (FeatureDist(0.5, 0.5, 0, 1), FeatureDist(0.5, 0.5, 0, 1)),
            "AGE": (FeatureDist(18, 1.0, 16, 24), FeatureDist(18, 1.0, 16, 24)),
            # Carried for schema completeness; no dynamics read them.
            "HRSWK": (FeatureDist(40, 5, 0, 80), FeatureDist(40, 5, 0, 80)),
            "EMSEC": (FeatureDist(2, 1, 1, 4), FeatureDist(2, 1, 1, 4)),
            "EMSIZE": (FeatureDist(3, 1.5, 1, 6), FeatureDist(3, 1.5, 1, 6)),
            "UGLOAN": (FeatureDist(15_000, 8_000, 0, 100_000), FeatureDist(22_000, 10_000, 0, 100_000)),
            "GRLOAN": (FeatureDist(8_000, 6_000, 0, 100_000), FeatureDist(12_000, 8_000, 0, 100_000)),
        },
        n_regions=9,
        region_feature="REGION",
        region_mode="uniform",
    )


def default_baseline_gpa_scorer() -> AffineScorer:
    return AffineScorer(weights={"GPA": 0.9}, bias=0.2, transform="clip", clip_lo=0.0, clip_hi=4.0)


@dataclass
class EducationConfig:
    horizon: int = 100
    discount: float = 1.0
    population: PopulationConfig = field(default_factory=default_education_population)
    n_regions: int = 9
    applicants_per_step: int = 20
    initial_infrastructure_units: int = 2
    faculty_per_unit: int = 5
    students_per_unit: int = 75
    faculty_salary: float = 2e5  # per faculty member per step
    full_tuition: float = 1e5  # per enrolled student per step
    mentorship_cost: float = 1.5e6  # per mentored student per step
    infra_base_cost: float = 1e6
    infra_cost_per_unit: float = 1e6
    build_base_time: float = 0.5
    build_time_per_unit: float = 2.0
    initial_university_budget: float = 5e7
    planner_budget: float = 2.5e7
    max_salary: float = 6e4
    career_length: int = 12
    degree_thresholds: tuple[int, int, int] = (4, 6, 10)  # undergrad, masters, doctoral
    gpa_walk_delta: float = 0.25
    gpa_noise_halfwidth: float = 0.4  # delta in gamma_0 ~ U[-delta+C, delta+C]
    gpa_support_center: float = 0.1  # C when supported
    significant_scholarship_tuition: float = 0.5  # ANNUALTUIT <= this triggers C
    scholarship_gpa_weight: float = 0.1  # gamma_1
    mentorship_gpa_weight: float = 0.3  # gamma_2
    leave_coeffs: tuple[float, float, float, float, float] = (0.0, -1.0, 0.5, -0.05, 0.001)
    # Optional per-stage override (undergrad, masters, doctoral phases keyed
    # by current time enrolled); the published sets are identical, so the
    # shared tuple above is the default.
    leave_coeffs_by_stage: Optional[tuple[tuple[float, ...], ...]] = None
    utility_base: tuple[float, float] = (0.1, 1.2)
    utility_curvature: tuple[float, float, float, float] = (3.0, -1.1, -1.1, -1.1)
    improve_q: float = 0.39
    improve_r: float = 0.4
    improve_v: Optional[float] = None
    improve_w: float = -4.0
    improve_u: float = 0.2
    tertiary_gpa_delta: float = 0.1
    underrepresented_group: int = 1
    force_full_scholarship: bool = False  # intervention hooks
    force_mentorship_all: bool = False
    baseline_gpa_scorer: AffineScorer = field(default_factory=default_baseline_gpa_scorer)
    reward_norms: Optional[tuple[float, ...]] = None  # defaults in default_success_spec

    def __post_init__(self) -> None:
        if self.career_length < 1:
            raise ValueError("career_length must be >= 1")
        a, b, c = self.degree_thresholds
        if not 0 < a <= b <= c:
            raise ValueError("degree thresholds must be positive and non-decreasing")

    @property
    def effective_improve_v(self) -> float:
        if self.improve_v is not None:
            return self.improve_v
        return 16.0 * self.n_regions / self.planner_budget

    @property
    def effective_reward_norms(self) -> tuple[float, ...]:
        if self.reward_norms is not None:
            return self.reward_norms
        # Profits normalized per the reference table; the salary total is a
        # currency quantity, normalized by max_salary so it lands in [0, 1].
        return (6.0e5, 1.0, 1.0, 1.0, 1.0, self.max_salary)


def _education_schema() -> ComponentSchema:
    return ComponentSchema(
        n_direct=1,
        n_rate=5,
        n_fair_measures=5,
        n_groups=2,
        direct_labels=("employer_profit",),
        rate_labels=("admission_rate", "grad_rate_undergrad", "grad_rate_masters", "grad_rate_doctoral", "average_salary"),
        rate_signs=(1, 1, 1, 1, 1),
        fairness_labels=("admission_rate", "grad_rate_undergrad", "grad_rate_masters", "grad_rate_doctoral", "salary"),
        fairness_norms=("none", "none", "none", "none", "rate_sum"),
    )


class EducationEnv(Environment):
    """See module docstring.  All four agents act every step."""

    STREAMS = ("population", "applicants", "gpa_noise", "leave", "improvement")

    def __init__(self, config: Optional[EducationConfig] = None, population: Optional[list[Individual]] = None):
        self.config = config or EducationConfig()
        ng = self.config.n_regions
        self.component_schema = _education_schema()
        self.horizon = self.config.horizon
        self.discount = self.config.discount
        self._explicit_population = population
        self.agent_specs = (
            AgentSpec(
                agent_id=ADMISSIONS,
                name="admissions",
                obs_feature_ids=("GPA", "GROUP", "REGION"),
                action_kind=IndividualScores(),
            ),
            AgentSpec(
                agent_id=UNIVERSITY_BUDGET,
                name="university_budget",
                obs_feature_ids=("CURRENTGPA", "ANNUALTUIT", "GROUP", "TIMEINUNIV"),
                action_kind=BudgetTree((5,)),
            ),
            AgentSpec(
                agent_id=EMPLOYER,
                name="employer",
                obs_feature_ids=("CUMGPA", "TIMEINUNIV", "EXPERIENCE", "GROUP"),
                action_kind=IndividualScores(),
            ),
            AgentSpec(
                agent_id=PLANNER,
                name="central_planner",
                obs_feature_ids=("GPA", "GROUP", "REGION", "INWORKF"),
                action_kind=BudgetTree((3, ng)),
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

        names = list(cfg.population.feature_dists) + ["REGION"]
        available = [n for n in dict.fromkeys(names) if n in individuals[0].features]
        self._store = ColumnStore(individuals, available)
        n = self._store.size
        self._region = self._store["REGION"].astype(np.int64)

        self.t = 0
        self._stage = np.full(n, TERTIARY, dtype=np.int64)
        self._time_in_univ = np.zeros(n, dtype=np.int64)
        self._sem_gpa = np.zeros(n)
        self._cum_gpa = np.zeros(n)
        self._gpa_initialized = np.zeros(n, dtype=bool)
        self._in_mentorship = np.zeros(n, dtype=bool)
        self._annual_tuit = np.ones(n)
        self._degree = np.full(n, DEGREE_NONE, dtype=np.int64)
        self._time_in_workf = np.zeros(n, dtype=np.int64)
        self._salary = np.zeros(n)
        self._salary_sum = np.zeros(n)
        self._salary_periods = np.zeros(n, dtype=np.int64)
        self._ave_salary = np.zeros(n)
        self._store["AVE_SALARY"] = np.zeros(n)

        self._units = cfg.initial_infrastructure_units
        self._univ_budget = cfg.initial_university_budget
        self._pending_projects: list[list] = []
        self._current_tuition_fraction = 1.0
        self._div_invest = 0.0
        self._tertiary_spend = np.zeros(cfg.n_regions)
        self._cumulative_employer_profit = 0.0
        self._cum_grads = np.zeros((2, 3))  # group x degree tier
        self._cum_leavers = np.zeros(2)
        self._last_group_utilities = (0.0, 0.0)

        self._obs_builder = ObservationBuilder()
        self._obs_builder.capture(self._derived_columns(np.arange(n)))
        return self._build_observations()

    @property
    def _faculty(self) -> int:
        return self.config.faculty_per_unit * self._units

    @property
    def _capacity(self) -> int:
        return self.config.students_per_unit * self._units

    def _derived_columns(self, idx: np.ndarray) -> dict[str, np.ndarray]:
        return {
            "GPA": self._store["GPA"][idx],
            "GROUP": self._store.group[idx].astype(np.float64),
            "REGION": self._region[idx].astype(np.float64),
            "CURRENTGPA": self._sem_gpa[idx],
            "CUMGPA": self._cum_gpa[idx],
            "ANNUALTUIT": self._annual_tuit[idx],
            "TIMEINUNIV": self._time_in_univ[idx].astype(np.float64),
            "EXPERIENCE": np.minimum(self._time_in_workf[idx] / self.config.career_length, 1.0),
            "INWORKF": (self._stage[idx] == WORKFORCE).astype(np.float64),
        }

    def _build_observations(self) -> dict[int, ObservationMatrix]:
        cfg = self.config
        pool = np.flatnonzero(self._stage == TERTIARY)
        n_sample = min(cfg.applicants_per_step, pool.shape[0])
        self._applicant_ids = (
            np.sort(self._streams.choice("applicants", pool, n_sample)) if n_sample else np.empty(0, dtype=np.int64)
        )
        self._student_ids = np.flatnonzero(self._stage == UNIVERSITY)
        self._worker_ids = np.flatnonzero(self._stage == WORKFORCE)
        index_sets = {
            ADMISSIONS: self._applicant_ids,
            UNIVERSITY_BUDGET: self._student_ids,
            EMPLOYER: self._worker_ids,
            PLANNER: np.arange(self._store.size),
        }
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
        valid = {ADMISSIONS, UNIVERSITY_BUDGET, EMPLOYER, PLANNER}
        unexpected = set(actions) - valid
        if unexpected:
            raise ContractError(f"unexpected agent ids in actions: {sorted(unexpected)}")
        admission_scores = require_action(actions, ADMISSIONS, "admissions", len(self._applicant_ids))
        budget_action = require_action(actions, UNIVERSITY_BUDGET, "university_budget", 5)
        check_simplex_blocks(budget_action, (5,), "university_budget")
        salary_action = require_action(actions, EMPLOYER, "employer", len(self._worker_ids))
        planner_action = require_action(actions, PLANNER, "central_planner", 3 + ng)
        check_simplex_blocks(planner_action, (3, ng), "central_planner")

        group_of = self._store.group
        n_groups = 2
        applied = np.zeros(n_groups)
        entered = np.zeros(n_groups)
        leavers = np.zeros(n_groups)
        grads = np.zeros((n_groups, 3))  # columns: undergrad, masters, doctoral
        salaries_paid = np.zeros(n_groups)
        workers_paid = np.zeros(n_groups)

        # 1. Central planner: tertiary drift, university funding, diversity pot.
        tertiary_amt = cfg.planner_budget * planner_action[0] * planner_action[3 : 3 + ng]
        self._univ_budget += cfg.planner_budget * planner_action[1]
        self._div_invest = cfg.planner_budget * planner_action[2]
        self._tertiary_spend = tertiary_amt
        self.last_planner_allocation = {
            "budget": cfg.planner_budget,
            "tertiary": float(tertiary_amt.sum()),
            "university": cfg.planner_budget * planner_action[1],
            "diversity": self._div_invest,
        }
        self._tertiary_improvement()

        # 2. Admissions up to remaining capacity.  Enrolling before the
        # budget phase lets this step's scholarship level and mentorship
        # slots reach the incoming class, whose enrollment GPA anchor is
        # computed later this step.
        if len(self._applicant_ids):
            np.add.at(applied, group_of[self._applicant_ids], 1.0)
            slack = max(self._capacity - int(np.count_nonzero(self._stage == UNIVERSITY)), 0)
            order = np.lexsort((self._store.ids[self._applicant_ids], -admission_scores))
            admitted = self._applicant_ids[order[:slack]]
            rejected = np.setdiff1d(self._applicant_ids, admitted, assume_unique=True)
            np.add.at(entered, group_of[admitted], 1.0)
            self._stage[admitted] = UNIVERSITY
            self._time_in_univ[admitted] = 0
            self._gpa_initialized[admitted] = False
            self._annual_tuit[admitted] = self._current_tuition_fraction
            self._enter_workforce(rejected)

        # 3. Tuition revenue at the current scholarship-adjusted level.
        students = np.flatnonzero(self._stage == UNIVERSITY)
        self._univ_budget += float(self._annual_tuit[students].sum()) * cfg.full_tuition

        # 4. University budget allocation (construction ticks first so new
        # projects wait their full build time).
        self._advance_projects()
        termination = self._apply_university_budget(budget_action)

        # 5. Student GPA dynamics and departure decisions.
        students = np.flatnonzero(self._stage == UNIVERSITY)
        if len(students):
            self._time_in_univ[students] += 1
            self._update_gpas(students)
            p_leave = self._leave_probabilities(students)
            draws = self._streams.random("leave", len(students))
            leaving = students[draws < p_leave]
            if len(leaving):
                time_enrolled = self._time_in_univ[leaving]
                ug, ms, phd = cfg.degree_thresholds
                tier = np.zeros(len(leaving), dtype=np.int64)
                tier[time_enrolled >= ug] = DEGREE_UNDERGRAD
                tier[time_enrolled >= ms] = DEGREE_MASTERS
                tier[time_enrolled >= phd] = DEGREE_DOCTORAL
                self._degree[leaving] = np.maximum(self._degree[leaving], tier)
                g = group_of[leaving]
                np.add.at(leavers, g, 1.0)
                for level, col in ((DEGREE_UNDERGRAD, 0), (DEGREE_MASTERS, 1), (DEGREE_DOCTORAL, 2)):
                    np.add.at(grads[:, col], g[tier >= level], 1.0)
                self._enter_workforce(leaving)

        # 6. Salaries, diversity top-ups, employer utility, retirements.
        employer_profit = 0.0
        workers = self._worker_ids
        if len(workers):
            base_frac = salary_action
            minority = group_of[workers] == cfg.underrepresented_group
            topup = np.zeros(len(workers))
            if self._div_invest > 0 and np.any(minority):
                topup[minority] = self._div_invest / int(np.count_nonzero(minority))
            salaries = base_frac * cfg.max_salary + topup
            self._salary[workers] = salaries
            self._salary_sum[workers] += salaries
            self._salary_periods[workers] += 1
            self._ave_salary[workers] = self._salary_sum[workers] / self._salary_periods[workers]
            experience = np.minimum(self._time_in_workf[workers] / cfg.career_length, 1.0)
            utilities = employer_utility(
                base_frac,
                topup / cfg.max_salary,
                self._cum_gpa[workers],
                self._time_in_univ[workers],
                experience,
                cfg.utility_base,
                cfg.utility_curvature,
            )
            employer_profit = float(utilities.sum())
            g = group_of[workers]
            np.add.at(salaries_paid, g, salaries)
            np.add.at(workers_paid, g, 1.0)
            util_means = []
            for grp in range(n_groups):
                mask = g == grp
                util_means.append(float(utilities[mask].mean()) if np.any(mask) else 0.0)
            self._last_group_utilities = tuple(util_means)

            self._time_in_workf[workers] += 1
            retiring = workers[self._time_in_workf[workers] >= cfg.career_length]
            self._retire(retiring)

        self._cumulative_employer_profit += employer_profit
        if termination is None and self._cumulative_employer_profit < 0:
            termination = Termination.FINANCIAL_FAILURE

        self._cum_leavers += leavers
        self._cum_grads += grads

        components = StepComponents(
            reward_components=np.array(
                [
                    employer_profit,
                    entered.sum(), grads[:, 0].sum(), grads[:, 1].sum(), grads[:, 2].sum(), salaries_paid.sum(),
                    applied.sum(), leavers.sum(), leavers.sum(), leavers.sum(), workers_paid.sum(),
                ]
            ),
            fairness_components=np.array(
                [
                    entered[0], applied[0], entered[1], applied[1],
                    grads[0, 0], leavers[0], grads[1, 0], leavers[1],
                    grads[0, 1], leavers[0], grads[1, 1], leavers[1],
                    grads[0, 2], leavers[0], grads[1, 2], leavers[1],
                    salaries_paid[0], workers_paid[0], salaries_paid[1], workers_paid[1],
                ]
            ),
            t=self.t,
        )

        self.t += 1
        return self._build_observations(), components, termination

    # ------------------------------------------------------------------

    def _leave_probabilities(self, students: np.ndarray) -> np.ndarray:
        cfg = self.config
        t = self._time_in_univ[students]
        if cfg.leave_coeffs_by_stage is None:
            return leave_probability(self._cum_gpa[students], self._annual_tuit[students], t, cfg.leave_coeffs)
        ug, ms, phd = cfg.degree_thresholds
        out = np.empty(len(students))
        stage = np.zeros(len(students), dtype=np.int64)
        stage[t >= ug] = 1
        stage[t >= ms] = 2
        for s in range(3):
            mask = stage == s
            if np.any(mask):
                out[mask] = leave_probability(
                    self._cum_gpa[students[mask]], self._annual_tuit[students[mask]], t[mask],
                    cfg.leave_coeffs_by_stage[s],
                )
        return out

    def _tertiary_improvement(self) -> None:
        cfg = self.config
        pool = np.flatnonzero(self._stage == TERTIARY)
        if not len(pool):
            return
        p = improvement_probability(
            self._tertiary_spend[self._region[pool]], cfg.improve_q, cfg.improve_r, cfg.effective_improve_v, cfg.improve_w
        )
        draws = self._streams.random("improvement", len(pool))
        direction = (draws <= p).astype(np.float64) - (draws > p + cfg.improve_u).astype(np.float64)
        self._store["GPA"][pool] = np.clip(self._store["GPA"][pool] + direction * cfg.tertiary_gpa_delta, 0.0, 4.0)

    def _apply_university_budget(self, action: np.ndarray) -> Optional[Termination]:
        cfg = self.config
        budget = self._univ_budget
        infra_spend, salary_spend, scholarship_spend, mentorship_spend, rollover = (budget * share for share in action)
        self.last_university_allocation = {
            "budget": budget,
            "infrastructure": infra_spend,
            "salaries": salary_spend,
            "scholarships": scholarship_spend,
            "mentorship": mentorship_spend,
            "rollover": rollover,
        }

        payroll = self._faculty * cfg.faculty_salary
        if salary_spend + 1e-9 < payroll:
            # The university cannot pay its staff: episode fails.
            self._univ_budget = rollover
            return Termination.FINANCIAL_FAILURE

        students = np.flatnonzero(self._stage == UNIVERSITY)
        full_bill = len(students) * cfg.full_tuition
        if cfg.force_full_scholarship:
            fraction_unpaid = 0.0
        elif full_bill > 0:
            fraction_unpaid = max(0.0, 1.0 - scholarship_spend / full_bill)
        else:
            fraction_unpaid = 1.0
        self._current_tuition_fraction = fraction_unpaid
        self._annual_tuit[students] = fraction_unpaid

        self._in_mentorship[:] = False
        minority_students = students[self._store.group[students] == cfg.underrepresented_group]
        minority_students = minority_students[np.argsort(self._store.ids[minority_students], kind="stable")]
        if cfg.force_mentorship_all:
            self._in_mentorship[minority_students] = True
        elif len(minority_students):
            slots = int(mentorship_spend // cfg.mentorship_cost)
            self._in_mentorship[minority_students[:slots]] = True

        if infra_spend >= cfg.infra_base_cost:
            units = int(math.floor((infra_spend - cfg.infra_base_cost) / cfg.infra_cost_per_unit))
            if units >= 1:
                build_time = int(math.ceil(cfg.build_base_time + cfg.build_time_per_unit * units))
                self._pending_projects.append([units, build_time])

        self._univ_budget = rollover
        return None

    def _advance_projects(self) -> None:
        remaining = []
        for project in self._pending_projects:
            project[1] -= 1
            if project[1] <= 0:
                self._units += project[0]
            else:
                remaining.append(project)
        self._pending_projects = remaining

    def _update_gpas(self, students: np.ndarray) -> None:
        cfg = self.config
        fresh = students[~self._gpa_initialized[students]]
        if len(fresh):
            # Enrollment anchor: baseline merit + scholarship and mentorship
            # boosts + centered uniform noise (center > 0 when supported).
            baseline = cfg.baseline_gpa_scorer.score_columns(self._store.subset(fresh))
            supported = (self._annual_tuit[fresh] <= cfg.significant_scholarship_tuition) | self._in_mentorship[fresh]
            center = np.where(supported, cfg.gpa_support_center, 0.0)
            noise = self._streams.random("gpa_noise", len(fresh)) * 2.0 - 1.0
            gamma0 = noise * cfg.gpa_noise_halfwidth + center
            anchor = (
                baseline
                + gamma0
                + cfg.scholarship_gpa_weight * (1.0 - self._annual_tuit[fresh])
                + cfg.mentorship_gpa_weight * self._in_mentorship[fresh]
            )
            self._sem_gpa[fresh] = np.clip(anchor, 0.0, 4.0)
            self._cum_gpa[fresh] = 0.0
            self._gpa_initialized[fresh] = True

        walk = self._streams.random("gpa_noise", len(students)) * 2.0 - 1.0
        self._sem_gpa[students] = np.clip(self._sem_gpa[students] + walk * cfg.gpa_walk_delta, 0.0, 4.0)
        t = self._time_in_univ[students].astype(np.float64)
        self._cum_gpa[students] = ((t - 1.0) * self._cum_gpa[students] + self._sem_gpa[students]) / t

    def _enter_workforce(self, idx: np.ndarray) -> None:
        if not len(idx):
            return
        # Workers who never sat a semester here still carry their baseline
        # academic record into the labor market.
        never_enrolled = idx[~self._gpa_initialized[idx]]
        self._cum_gpa[never_enrolled] = self._store["GPA"][never_enrolled]
        self._stage[idx] = WORKFORCE
        self._time_in_workf[idx] = 0
        self._salary[idx] = 0.0
        self._salary_sum[idx] = 0.0
        self._salary_periods[idx] = 0
        self._in_mentorship[idx] = False

    def _retire(self, idx: np.ndarray) -> None:
        if not len(idx):
            return
        self._store["AVE_SALARY"][idx] = self._ave_salary[idx]
        # The degree already earned is kept: it only ever ratchets upward.
        self._stage[idx] = TERTIARY
        self._time_in_univ[idx] = 0
        self._time_in_workf[idx] = 0
        self._sem_gpa[idx] = 0.0
        self._cum_gpa[idx] = 0.0
        self._gpa_initialized[idx] = False
        self._annual_tuit[idx] = 1.0
        self._salary[idx] = 0.0

    # ------------------------------------------------------------------

    @property
    def indicators(self) -> dict[str, float]:
        total_leavers = self._cum_leavers.sum()
        total_ug = self._cum_grads[:, 0].sum()
        disadvantaged = self.config.underrepresented_group
        dis_leavers = self._cum_leavers[disadvantaged]
        return {
            "graduation_rate": float(total_ug / total_leavers) if total_leavers else 0.0,
            "disadvantaged_graduation_rate": float(self._cum_grads[disadvantaged, 0] / dis_leavers) if dis_leavers else 0.0,
            "disadvantaged_mean_utility": float(self._last_group_utilities[disadvantaged]),
            "mean_salary": float(self._salary[self._stage == WORKFORCE].mean()) if np.any(self._stage == WORKFORCE) else 0.0,
            "enrolled": float(np.count_nonzero(self._stage == UNIVERSITY)),
            "cumulative_employer_profit": self._cumulative_employer_profit,
        }

    def default_success_spec(self, lam: Optional[float] = None) -> SuccessSpec:
        schema = self.component_schema
        norms = self.config.effective_reward_norms
        if lam is not None:
            return SuccessSpec.from_lambda(lam, schema.n_rewards, schema.n_fair_measures, norms)
        k, m = schema.n_rewards, schema.n_fair_measures
        w = 1.0 / (k + m)
        return SuccessSpec(alpha=(w,) * k, beta=(w,) * m, reward_norms=norms)
