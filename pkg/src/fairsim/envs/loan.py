"""Loan pipeline simulator.

Three agents run a bank's consumer-credit pipeline over a shared population:

* admissions - sets per-group qualification-score thresholds each step;
* disbursement - scores the queue of approved-but-unfunded borrowers, of
  whom at most ``disbursement_cap`` receive funds per step;
* debt management - sets a per-group relief factor that scales down the
  installment the bank requests from repaying borrowers.

Individuals cycle applicant pool -> waiting queue -> repayment -> back to the
pool, with their credit features improving on repayment and deteriorating on
default.  Amortized installments follow Y_t = r / (1 - (1+r)^(t-m)) * B_t;
balances accrue as B_t = (1+r) B_{t-1} - X_t.

A borrower is willing to pay fraction clip(p + noise, 0, 1) of the full
scheduled installment; the bank requests (1 - d) of it, and the payment is
the smaller of the two.  Falling more than 10% behind on cumulative requests
for two consecutive steps triggers default, so relief lowers defaults at the
cost of slower amortization (loans that reach maturity with a residual
balance keep paying single-step payoff requests until cleared or defaulted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from ..core import (
    AgentSpec,
    ComponentSchema,
    ContractError,
    Environment,
    GroupVector,
    IndividualScores,
    ObservationMatrix,
    StepComponents,
    SuccessSpec,
    Termination,
)
from ..populations import AffineScorer, FeatureDist, Individual, PopulationConfig, generate_population
from .base import ColumnStore, ObservationBuilder, StreamFamily, require_action

__all__ = ["LoanConfig", "LoanEnv", "installment_request", "default_loan_population"]

# phases
POOL, WAITING, REPAYING = 0, 1, 2

ADMISSIONS, DISBURSEMENT, DEBT = 0, 1, 2


def installment_request(balance: float | np.ndarray, rate: float | np.ndarray, t: int, maturity: int | np.ndarray):
    """Fixed-rate installment that zeroes the balance at maturity.

    Y_t = r / (1 - (1+r)^(t-m)) * B_t for t < m; at or past maturity the
    remaining balance is requested in full with interest, (1+r) * B_t.
    """
    balance = np.asarray(balance, dtype=np.float64)
    rate = np.asarray(rate, dtype=np.float64)
    maturity = np.asarray(maturity)
    steps_left = maturity - t
    past = steps_left <= 1
    with np.errstate(over="ignore"):
        denom = 1.0 - (1.0 + rate) ** np.where(past, -1, t - maturity)
    regular = rate / denom * balance
    payoff = (1.0 + rate) * balance
    out = np.where(past, payoff, regular)
    return float(out) if out.ndim == 0 else out


def default_loan_population(size: int = 1000, seed: int = 0) -> PopulationConfig:
    """Two groups with the disadvantaged group shifted adversely on credit features."""
    return PopulationConfig(
        size=size,
        n_groups=2,
        group_proportions=(0.5, 0.5),
        seed=seed,
        feature_dists={
            "FICO_RANGE_LOW": (FeatureDist(720, 50, 300, 850), FeatureDist(640, 55, 300, 850)),
            "DTI": (FeatureDist(16, 6, 0, 45), FeatureDist(24, 8, 0, 45)),
            "ANNUALINC": (FeatureDist(90_000, 30_000, 10_000, 300_000), FeatureDist(55_000, 25_000, 10_000, 300_000)),
            "MTHS_SINCE_LAST_DELINQ": (FeatureDist(60, 30, 0, 120), FeatureDist(30, 25, 0, 120)),
            "INTRATE": (FeatureDist(0.010, 0.003, 0.003, 0.03), FeatureDist(0.014, 0.004, 0.003, 0.03)),
            "LOANAMOUNT": (FeatureDist(12_000, 6_000, 1_000, 40_000), FeatureDist(12_000, 6_000, 1_000, 40_000)),
        },
    )


def default_qualification_scorer() -> AffineScorer:
    return AffineScorer(
        weights={
            "FICO_RANGE_LOW": 0.012,
            "DTI": -0.04,
            "ANNUALINC": 6e-6,
            "MTHS_SINCE_LAST_DELINQ": 0.004,
        },
        bias=-7.96,
        transform="logistic",
    )


def default_propensity_scorer() -> AffineScorer:
    return AffineScorer(
        weights={"FICO_RANGE_LOW": 0.0006, "DTI": -0.002},
        bias=0.63,
        transform="clip",
        clip_lo=0.0,
        clip_hi=1.0,
    )


@dataclass
class LoanConfig:
    horizon: int = 400
    discount: float = 1.0
    population: PopulationConfig = field(default_factory=default_loan_population)
    applicants_per_step: int = 20
    disbursement_cap: int = 10
    deposit_rate: float = 0.006  # bank's per-step cost of funds on outstanding principal
    payment_noise_mu: float = 0.0
    payment_noise_sigma: float = 0.025
    threshold_arity: int = 2
    debt_arity: int = 2
    term_range: tuple[int, int] = (18, 36)
    payoff_tolerance: float = 0.01
    behind_fraction: float = 0.9  # received < 0.9 * requested counts as behind
    termination_delta: dict[str, float] = field(
        default_factory=lambda: {"FICO_RANGE_LOW": 100.0, "FICO_RANGE_HIGH": 100.0, "MTHS_SINCE_LAST_DELINQ": 5.0}
    )
    feature_bounds: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {
            "FICO_RANGE_LOW": (300.0, 850.0),
            "FICO_RANGE_HIGH": (300.0, 850.0),
            "MTHS_SINCE_LAST_DELINQ": (0.0, 120.0),
        }
    )
    qualification_scorer: AffineScorer = field(default_factory=default_qualification_scorer)
    propensity_scorer: AffineScorer = field(default_factory=default_propensity_scorer)
    reward_norms: tuple[float, ...] = (8.9e4, 1.0, 1.0)  # bank profit, admission rate, default rate
    fico_range_width: float = 19.0

    def __post_init__(self) -> None:
        if self.disbursement_cap < 1:
            raise ValueError("disbursement_cap must be >= 1")
        if self.payment_noise_sigma < 0:
            raise ValueError("payment noise sigma must be >= 0")
        if self.threshold_arity not in (1, 2) or self.debt_arity not in (1, 2):
            raise ValueError("threshold/debt arity must be 1 (global) or 2 (per group)")


def _loan_schema() -> ComponentSchema:
    return ComponentSchema(
        n_direct=1,
        n_rate=2,
        n_fair_measures=3,
        n_groups=2,
        direct_labels=("bank_profit",),
        rate_labels=("admission_rate", "default_rate"),
        rate_signs=(1, -1),
        fairness_labels=("admission_rate", "wait_time", "default_rate"),
        fairness_norms=("none", "rate_sum", "none"),
    )


class LoanEnv(Environment):
    """See module docstring.  All agents act every step (Horizon default 400)."""

    STREAMS = ("population", "applicants", "terms", "payment_noise")

    def __init__(self, config: Optional[LoanConfig] = None, population: Optional[list[Individual]] = None):
        self.config = config or LoanConfig()
        self.component_schema = _loan_schema()
        self.horizon = self.config.horizon
        self.discount = self.config.discount
        self._explicit_population = population
        self.agent_specs = (
            AgentSpec(
                agent_id=ADMISSIONS,
                name="admissions",
                obs_feature_ids=("QUALSCORE", "GROUP", "DTI", "ANNUALINC"),
                action_kind=GroupVector(self.config.threshold_arity),
            ),
            AgentSpec(
                agent_id=DISBURSEMENT,
                name="disbursement",
                obs_feature_ids=("QUALSCORE", "GROUP", "LOANAMOUNT", "WAITTIME"),
                action_kind=IndividualScores(),
            ),
            AgentSpec(
                agent_id=DEBT,
                name="debt_management",
                obs_feature_ids=("GROUP", "WARNING", "BEHIND_RATIO", "TIMETOMATURITY"),
                action_kind=GroupVector(self.config.debt_arity),
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

        names = list(cfg.population.feature_dists) + ["FICO_RANGE_HIGH"]
        available = [n for n in dict.fromkeys(names) if n in individuals[0].features]
        self._store = ColumnStore(individuals, available)
        n = self._store.size
        if "FICO_RANGE_HIGH" not in self._store.columns:
            self._store["FICO_RANGE_HIGH"] = self._store["FICO_RANGE_LOW"] + cfg.fico_range_width

        self.t = 0
        self._phase = np.full(n, POOL, dtype=np.int64)
        self._balance = np.zeros(n)
        self._maturity = np.zeros(n, dtype=np.int64)
        self._repay_start = np.zeros(n, dtype=np.int64)
        self._tot_requested = np.zeros(n)
        self._tot_received = np.zeros(n)
        self._consecutive_behind = np.zeros(n, dtype=np.int64)
        self._admit_step = np.zeros(n, dtype=np.int64)
        self._current_install = np.zeros(n)
        self._cumulative_received = 0.0
        self._cumulative_lost = 0.0
        self._cum_defaults = 0
        self._cum_terminations = 0

        self._obs_builder = ObservationBuilder()
        self._obs_builder.capture(self._derived_columns(np.arange(n)))
        return self._build_observations()

    # -- derived observation columns ------------------------------------

    def _qual_scores(self, idx: np.ndarray) -> np.ndarray:
        return self.config.qualification_scorer.score_columns(self._store.subset(idx))

    def _derived_columns(self, idx: np.ndarray) -> dict[str, np.ndarray]:
        with np.errstate(invalid="ignore"):
            behind = np.where(self._tot_requested[idx] > 0, self._tot_received[idx] / np.maximum(self._tot_requested[idx], 1e-12), 1.0)
        cols = {
            "QUALSCORE": self._qual_scores(idx),
            "GROUP": self._store.group[idx].astype(np.float64),
            "DTI": self._store["DTI"][idx],
            "ANNUALINC": self._store["ANNUALINC"][idx],
            "LOANAMOUNT": self._store["LOANAMOUNT"][idx],
            "WAITTIME": np.where(self._phase[idx] == WAITING, self.t - self._admit_step[idx], 0.0),
            "WARNING": (self._consecutive_behind[idx] >= 1).astype(np.float64),
            "BEHIND_RATIO": behind,
            "TIMETOMATURITY": np.where(self._phase[idx] == REPAYING, np.maximum(self._maturity[idx] - self.t, 0), 0.0),
        }
        return cols

    def _build_observations(self) -> dict[int, ObservationMatrix]:
        pool_ids = np.flatnonzero(self._phase == POOL)
        n_sample = min(self.config.applicants_per_step, pool_ids.shape[0])
        sampled = np.sort(self._streams.choice("applicants", pool_ids, n_sample)) if n_sample else np.empty(0, dtype=np.int64)
        self._applicant_ids = sampled
        self._waiting_ids = np.flatnonzero(self._phase == WAITING)
        self._repaying_ids = np.flatnonzero((self._phase == REPAYING) & (self._repay_start <= self.t))

        obs = {}
        for spec, idx in zip(self.agent_specs, (self._applicant_ids, self._waiting_ids, self._repaying_ids)):
            cols = self._derived_columns(idx)
            obs[spec.agent_id] = self._obs_builder.build(spec.obs_feature_ids, cols, self._store.ids[idx])
        return obs

    # -- step ------------------------------------------------------------

    def step(self, actions: Mapping[int, np.ndarray]):
        cfg = self.config
        unexpected = set(actions) - {ADMISSIONS, DISBURSEMENT, DEBT}
        if unexpected:
            raise ContractError(f"unexpected agent ids in actions: {sorted(unexpected)}")
        thresholds = require_action(actions, ADMISSIONS, "admissions", cfg.threshold_arity)
        scores = require_action(actions, DISBURSEMENT, "disbursement", len(self._waiting_ids))
        debt = require_action(actions, DEBT, "debt_management", cfg.debt_arity)

        n_groups = 2
        n_applied = np.zeros(n_groups)
        n_admitted = np.zeros(n_groups)
        n_disbursed = np.zeros(n_groups)
        wait_steps = np.zeros(n_groups)
        n_terminated = np.zeros(n_groups)
        n_defaulted = np.zeros(n_groups)

        # 1. Disbursement of the queue observed by the agent (descending
        # score, ties by individual id so the order is reproducible).
        if len(self._waiting_ids):
            order = np.lexsort((self._store.ids[self._waiting_ids], -scores))
            chosen = self._waiting_ids[order[: cfg.disbursement_cap]]
            for i in chosen:
                g = self._store.group[i]
                n_disbursed[g] += 1
                wait_steps[g] += self.t - self._admit_step[i]
            self._phase[chosen] = REPAYING
            self._balance[chosen] = self._store["LOANAMOUNT"][chosen]
            terms = self._streams.integers("terms", cfg.term_range[0], cfg.term_range[1] + 1, len(chosen))
            self._maturity[chosen] = self.t + terms
            self._repay_start[chosen] = self.t + 1
            self._tot_requested[chosen] = 0.0
            self._tot_received[chosen] = 0.0
            self._consecutive_behind[chosen] = 0

        # 2. Admissions on this step's applicant sample.
        if len(self._applicant_ids):
            qual = self._qual_scores(self._applicant_ids)
            groups = self._store.group[self._applicant_ids]
            thr = thresholds[groups] if cfg.threshold_arity == 2 else np.full(len(groups), thresholds[0])
            admitted_mask = qual >= thr
            np.add.at(n_applied, groups, 1.0)
            np.add.at(n_admitted, groups[admitted_mask], 1.0)
            admitted = self._applicant_ids[admitted_mask]
            self._phase[admitted] = WAITING
            self._admit_step[admitted] = self.t

        # 3. Repayment on loans that began repaying before this step.
        payments_total = 0.0
        write_offs = 0.0
        rep = self._repaying_ids
        if len(rep):
            balance = self._balance[rep]
            rate = self._store["INTRATE"][rep]
            y_full = installment_request(balance, rate, self.t, self._maturity[rep])
            groups = self._store.group[rep]
            d = debt[groups] if cfg.debt_arity == 2 else np.full(len(rep), debt[0])
            y_requested = (1.0 - d) * y_full
            propensity = cfg.propensity_scorer.score_columns(self._store.subset(rep))
            noise = self._streams.normal("payment_noise", cfg.payment_noise_mu, cfg.payment_noise_sigma, len(rep))
            willing = np.clip(propensity + noise, 0.0, 1.0) * y_full
            paid = np.minimum(willing, y_requested)

            new_balance = (1.0 + rate) * balance - paid
            self._balance[rep] = new_balance
            self._current_install[rep] = y_requested
            self._tot_requested[rep] += y_requested
            self._tot_received[rep] += paid
            behind = self._tot_received[rep] + 1e-9 < cfg.behind_fraction * self._tot_requested[rep]
            self._consecutive_behind[rep] = np.where(behind, self._consecutive_behind[rep] + 1, 0)
            payments_total = float(paid.sum())

            repaid_mask = self._balance[rep] <= cfg.payoff_tolerance
            default_mask = ~repaid_mask & (self._consecutive_behind[rep] >= 2)
            for i, outcome in ((rep[repaid_mask], "repaid"), (rep[default_mask], "defaulted")):
                if not len(i):
                    continue
                defaulted = outcome == "defaulted"
                if defaulted:
                    write_offs += float(self._balance[i].sum())
                    np.add.at(n_defaulted, self._store.group[i], 1.0)
                np.add.at(n_terminated, self._store.group[i], 1.0)
                self._apply_termination_update(i, defaulted)
                self._phase[i] = POOL
                self._balance[i] = 0.0
                self._current_install[i] = 0.0

        # 4. Bank accounting.  Funding costs accrue on loans in active
        # repayment, starting the same step their payments start.
        active = (self._phase == REPAYING) & (self._repay_start <= self.t)
        outstanding = float(self._balance[active].sum())
        funding_cost = cfg.deposit_rate * outstanding
        profit = payments_total - funding_cost
        self._cumulative_received += payments_total
        self._cumulative_lost += funding_cost + write_offs
        self._cum_defaults += int(n_defaulted.sum())
        self._cum_terminations += int(n_terminated.sum())

        components = StepComponents(
            reward_components=np.array(
                [profit, n_admitted.sum(), n_defaulted.sum(), n_applied.sum(), n_terminated.sum()]
            ),
            fairness_components=np.array(
                [
                    n_admitted[0], n_applied[0], n_admitted[1], n_applied[1],
                    wait_steps[0], n_disbursed[0], wait_steps[1], n_disbursed[1],
                    n_defaulted[0], n_terminated[0], n_defaulted[1], n_terminated[1],
                ]
            ),
            t=self.t,
        )

        termination = None
        if self._cumulative_lost > self._cumulative_received:
            termination = Termination.FINANCIAL_FAILURE

        self.t += 1
        obs = self._build_observations()
        return obs, components, termination

    def _apply_termination_update(self, idx: np.ndarray, defaulted: bool) -> None:
        sign = -1.0 if defaulted else 1.0
        for name, delta in self.config.termination_delta.items():
            lo, hi = self.config.feature_bounds.get(name, (-math.inf, math.inf))
            self._store[name][idx] = np.clip(self._store[name][idx] + sign * delta, lo, hi)

    # -- reporting --------------------------------------------------------

    @property
    def indicators(self) -> dict[str, float]:
        """Population-level gauges used by the intervention experiments."""
        all_idx = np.arange(self._store.size)
        qual = self._qual_scores(all_idx)
        cum_default_rate = self._cum_defaults / self._cum_terminations if self._cum_terminations else 0.0
        return {
            "mean_qualification_score": float(qual.mean()),
            "default_rate": cum_default_rate,
            "bank_cumulative_received": self._cumulative_received,
            "bank_cumulative_lost": self._cumulative_lost,
        }

    def default_success_spec(self, lam: Optional[float] = None) -> SuccessSpec:
        schema = self.component_schema
        if lam is not None:
            return SuccessSpec.from_lambda(lam, schema.n_rewards, schema.n_fair_measures, self.config.reward_norms)
        k, m = schema.n_rewards, schema.n_fair_measures
        w = 1.0 / (k + m)
        return SuccessSpec(alpha=(w,) * k, beta=(w,) * m, reward_norms=self.config.reward_norms)
