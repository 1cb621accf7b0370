"""Healthcare system: transitions, planner tree, queues, insurer accounting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairsim.core import ContractError, Termination, run_episode
from fairsim.envs import healthcare as H
from fairsim.envs.healthcare import (
    HealthcareConfig,
    HealthcareEnv,
    TransitionCurve,
    acceptance_probability,
    improvement_probability,
    subsidy_weights,
)
from fairsim.policies import ConstantFillPolicy, ConstantPolicy, RandomScorePolicy
from fairsim.populations import AffineScorer, FeatureDist, Individual, PopulationConfig

FEATURES = ("FTOTVAL", "FAMSIZE", "AGE", "HEALTHX")


def hperson(i, region=0, ftotval=4000.0, famsize=2.0, health=2.5):
    return Individual(
        id=i,
        group=region,
        features={"FTOTVAL": ftotval, "FAMSIZE": famsize, "AGE": 40.0, "HEALTHX": health, "REGION": float(region)},
    )


def tiny_env(individuals, **overrides):
    n_regions = overrides.pop("n_regions", 4)
    pop = PopulationConfig(
        size=len(individuals),
        n_groups=n_regions,
        group_proportions=(1.0 / n_regions,) * n_regions,
        feature_dists={name: tuple(FeatureDist(2.0, 0.5, 1.0, 5.0) for _ in range(n_regions)) for name in FEATURES},
        n_regions=n_regions,
        region_feature="REGION",
        region_mode="group",
    )
    cfg = HealthcareConfig(
        horizon=overrides.pop("horizon", 30),
        population=pop,
        n_regions=n_regions,
        health_risk_scorer=AffineScorer(weights={"HEALTHX": 1.0}, transform="clip", clip_lo=1.0, clip_hi=5.0),
        improve_deltas=overrides.pop("improve_deltas", {}),
        **overrides,
    )
    return HealthcareEnv(cfg, population=individuals)


def full_actions(env, obs, premiums=0.5, hospital_scores=None, tree=None):
    cfg = env.config
    ng = cfg.n_regions
    actions = {}
    if env.t % cfg.premium_period == 0:
        actions[H.INSURANCE] = np.full(obs[H.INSURANCE].n_rows, premiums, dtype=float)
    if env.t % cfg.planner_period == 0:
        if tree is None:
            tree = np.concatenate([[0.0, 0.0, 0.0, 1.0], np.full(3 * ng, 1.0 / ng)])
        actions[H.PLANNER] = np.asarray(tree, dtype=float)
    n_queue = obs[H.HOSPITAL].n_rows
    actions[H.HOSPITAL] = (
        np.asarray(hospital_scores, dtype=float) if hospital_scores is not None else np.full(n_queue, 0.5)
    )
    return actions


class TestAcceptanceProbability:
    def test_free_coverage_always_taken(self):
        assert acceptance_probability(np.array([0.01]), np.array([0.0]), np.array([5.0]))[0] == 1.0

    def test_vanishing_income_rejects(self):
        p = acceptance_probability(np.array([1e-9]), np.array([500.0]), np.array([3.0]))[0]
        assert p == pytest.approx(0.0, abs=1e-9)

    def test_plug_in_value(self):
        p = acceptance_probability(np.array([50_000.0]), np.array([1000.0]), np.array([5.0]))[0]
        assert p == pytest.approx(1.0 - np.exp(-10.0), abs=1e-12)

    @given(st.floats(100, 1e6), st.floats(1, 5000), st.floats(1, 10))
    def test_always_a_probability(self, income, premium, famsize):
        p = acceptance_probability(np.array([income]), np.array([premium]), np.array([famsize]))[0]
        assert 0.0 <= p <= 1.0


class TestTransitionCurves:
    TERMINATE = TransitionCurve(offset=0.0, base=1.03, sign=1.0, e_ill=-7.0)
    MORTALITY = TransitionCurve(offset=-1.96, base=1.02, sign=1.0, e_ill=3.0, e_wait=3.0, e_health=3.0, const=-7.0)

    def test_terminate_at_one_step(self):
        p = self.TERMINATE.probability(np.array([1.0]), np.zeros(1), np.zeros(1))[0]
        assert p == pytest.approx(1.03**-7, abs=1e-12)
        assert p == pytest.approx(0.8131, abs=5e-5)

    def test_terminate_decreasing_in_illness_length(self):
        ill = np.arange(1.0, 20.0)
        p = self.TERMINATE.probability(ill, np.zeros_like(ill), np.zeros_like(ill))
        assert np.all(np.diff(p) < 0)

    def test_mortality_increases_with_wait(self):
        wait = np.arange(0.0, 30.0)
        p = self.MORTALITY.probability(np.full_like(wait, 5.0), wait, np.full_like(wait, 4.0))
        assert np.all(np.diff(p) >= 0)
        assert p[-1] > 0

    def test_death_plus_cured_equals_terminate(self):
        ill, wait, health = np.array([4.0]), np.array([6.0]), np.array([4.5])
        p_term = self.TERMINATE.probability(ill, wait, health)[0]
        p_mort = self.MORTALITY.probability(ill, wait, health)[0]
        p_death = p_term * p_mort
        p_cured = p_term * (1.0 - p_mort)
        assert p_death + p_cured == p_term  # exact, not approximate

    def test_degenerate_config_never_resolves(self):
        frozen = TransitionCurve(offset=0.0, base=1.0, sign=0.0)
        p = frozen.probability(np.array([3.0]), np.array([1.0]), np.array([2.0]))[0]
        assert p == 0.0

    @given(
        st.floats(0, 50), st.floats(0, 50), st.floats(1, 5),
        st.floats(-3, 3), st.floats(0.5, 1.5), st.floats(-10, 10),
    )
    @settings(max_examples=200)
    def test_clipped_to_unit_interval(self, ill, wait, health, offset, base, const):
        curve = TransitionCurve(offset=offset, base=base, sign=1.0, e_ill=0.3, e_wait=0.3, e_health=0.3, const=const)
        p = curve.probability(np.array([ill]), np.array([wait]), np.array([health]))[0]
        assert 0.0 <= p <= 1.0


class TestImprovementProbability:
    def test_reference_constants_at_zero_spend(self):
        # Printed offsets: W = +4 saturates the sigmoid from the start.
        assert improvement_probability(np.array([0.0]), 0.29, 0.4, 1e-7, 4.0)[0] == pytest.approx(0.6828056, abs=1e-6)
        assert improvement_probability(np.array([0.0]), 0.39, 0.4, 1e-7, 4.0)[0] == pytest.approx(0.7828056, abs=1e-6)

    def test_sigmoid_limit(self):
        assert improvement_probability(np.array([1e12]), 0.29, 0.4, 1e-7, 4.0)[0] == pytest.approx(0.69, abs=1e-9)

    def test_rising_offset_gives_usable_range(self):
        # The shipped default W = -4 leaves room for spend to matter.
        lo = improvement_probability(np.array([0.0]), 0.29, 0.4, 2.56e-7, -4.0)[0]
        hi = improvement_probability(np.array([1e9]), 0.29, 0.4, 2.56e-7, -4.0)[0]
        assert lo == pytest.approx(0.29 + 0.4 / (1 + np.exp(4.0)), abs=1e-9)
        assert hi == pytest.approx(0.69, abs=1e-6)


class TestSubsidyWeights:
    def test_inverse_income_weights(self):
        w = subsidy_weights(np.array([1.0, 3.0]))
        assert w == pytest.approx([0.75, 0.25])

    def test_zero_income_floored(self):
        w = subsidy_weights(np.array([0.0, 1.0]), floor=1.0)
        assert w == pytest.approx([0.5, 0.5])
        assert np.isfinite(w).all()

    @given(st.lists(st.floats(0, 1e6), min_size=1, max_size=20))
    def test_weights_form_simplex(self, incomes):
        w = subsidy_weights(np.array(incomes))
        assert float(w.sum()) == pytest.approx(1.0, abs=1e-9)
        assert np.all(w >= 0)


class TestPremiumsAndCoverage:
    def test_premium_scaling(self):
        people = [hperson(i) for i in range(3)]
        env = tiny_env(people, sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        for value, expected in ((0.0, 0.0), (1.0, 1000.0), (0.5, 500.0)):
            env2 = tiny_env([hperson(i) for i in range(3)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
            obs2 = env2.reset(0)
            env2.step(full_actions(env2, obs2, premiums=value))
            assert env2._premium.tolist() == [expected] * 3

    def test_zero_premium_means_universal_coverage(self):
        env = tiny_env([hperson(i) for i in range(5)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        env.step(full_actions(env, obs, premiums=0.0))
        assert env._insured.all()

    def test_coverage_persists_between_offers(self):
        env = tiny_env([hperson(i, ftotval=1e6) for i in range(4)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        obs, _, _ = env.step(full_actions(env, obs, premiums=0.2))
        insured_after_offer = env._insured.copy()
        for _ in range(4):  # steps 1-4: no offer, coverage unchanged
            obs, _, _ = env.step(full_actions(env, obs))
            assert np.array_equal(env._insured, insured_after_offer)

    def test_force_insured_override(self):
        env = tiny_env([hperson(i, ftotval=1.0) for i in range(5)], force_insured=True,
                       sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        env.step(full_actions(env, obs, premiums=1.0))
        assert env._insured.all()


class TestSickness:
    def test_degenerate_config_never_sick(self):
        env = tiny_env([hperson(i) for i in range(10)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        for _ in range(10):
            obs, comps, _ = env.step(full_actions(env, obs))
        assert not np.any(env._status == H.ILL)

    def test_sick_probability_formula(self):
        # insured, HEALTH=1 -> 0.08; uninsured, HEALTH=5 -> 0.8
        a, b = 0.4, 0.4
        assert a * (1 - 1) + b / 5 * 1.0 == pytest.approx(0.08)
        assert a * (1 - 0) + b / 5 * 5.0 == pytest.approx(0.8)

    def test_no_resolution_on_onset_step(self):
        env = tiny_env([hperson(0, health=5.0, ftotval=1e-9)], sick_insured_coeff=1.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        obs, comps, _ = env.step(full_actions(env, obs, premiums=1.0))
        # Premium 1000 against tiny income: virtually surely uninsured -> sick.
        assert env._status[0] == H.ILL and env._illtime[0] == 0
        assert comps.reward_components[6] == 0  # no terminations on onset step


class TestHospitalQueue:
    def sick_env(self, n, beds, regions=None, **overrides):
        regions = regions or [0] * n
        people = [hperson(i, region=regions[i], health=5.0, ftotval=1e-9) for i in range(n)]
        env = tiny_env(people, beds_per_region=beds, sick_insured_coeff=1.0, sick_health_coeff=0.0,
                       terminate_curve=TransitionCurve(offset=0.0, base=1.0, sign=0.0), **overrides)
        obs = env.reset(0)
        obs, _, _ = env.step(full_actions(env, obs, premiums=1.0))  # everyone falls ill
        assert np.all(env._status == H.ILL)
        return env, obs

    def test_enough_beds_admits_all(self):
        env, obs = self.sick_env(3, beds=5)
        env.step(full_actions(env, obs))
        assert env._in_hosp.sum() == 3

    def test_single_bed_goes_to_top_score(self):
        env, obs = self.sick_env(2, beds=1)
        scores = np.zeros(2)
        scores[obs[H.HOSPITAL].row_ids == 1] = 0.9
        scores[obs[H.HOSPITAL].row_ids == 0] = 0.2
        env.step(full_actions(env, obs, hospital_scores=scores))
        assert env._in_hosp[1] and not env._in_hosp[0]

    def test_zero_beds_admits_nobody(self):
        env, obs = self.sick_env(3, beds=0)
        env.step(full_actions(env, obs, hospital_scores=np.array([1.0, 1.0, 1.0])))
        assert env._in_hosp.sum() == 0

    def test_occupancy_never_exceeds_beds(self):
        env = tiny_env([hperson(i, region=i % 4, health=4.0) for i in range(40)], beds_per_region=2)
        obs = env.reset(1)
        pols = {
            H.INSURANCE: ConstantFillPolicy(0.5),
            H.HOSPITAL: RandomScorePolicy(3),
            H.PLANNER: ConstantPolicy(np.concatenate([[0, 0, 0, 1.0], np.full(12, 0.25)])),
        }
        def check(env_, t, comps):
            occupancy = np.bincount(env_._region[env_._in_hosp], minlength=4)
            assert np.all(occupancy <= env_._beds)
        run_episode(env, pols, 1, env.default_success_spec(), on_step=check)

    def test_waitbed_increments_only_for_eligible_waiters(self):
        env, obs = self.sick_env(2, beds=1)
        scores = np.zeros(2)
        scores[obs[H.HOSPITAL].row_ids == 0] = 1.0
        obs, _, _ = env.step(full_actions(env, obs, hospital_scores=scores))
        assert env._waitbed[0] == 0  # hospitalized before the increment
        assert env._waitbed[1] == 1


class TestPlannerBudget:
    def test_all_rollover_carries_budget(self):
        env = tiny_env([hperson(i) for i in range(4)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        env.step(full_actions(env, obs))  # all-rollover tree
        assert env._rollover == pytest.approx(env.config.planner_budget)
        assert env._subsidy_per_step.sum() == 0.0

    def test_budget_conservation(self):
        env = tiny_env([hperson(i, region=i % 4) for i in range(8)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        tree = np.concatenate([[0.3, 0.3, 0.2, 0.2], np.full(4, 0.25), np.full(4, 0.25), np.full(4, 0.25)])
        env.step(full_actions(env, obs, tree=tree))
        budget = env.config.planner_budget
        spent = (env._subsidy_per_step.sum() + env._health_spend_per_step.sum()) * env.config.planner_period
        infra = 0.2 * budget
        assert spent + infra + env._rollover == pytest.approx(budget, abs=1e-6)

    def test_infrastructure_bed_count(self):
        env = tiny_env([hperson(i, region=i % 4) for i in range(4)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        # Route the whole budget into region 0 infrastructure, sized for 1 bed.
        cfg = env.config
        share = 3.1e7 / cfg.planner_budget
        tree = np.concatenate([
            [0.0, 0.0, share, 1.0 - share],
            np.full(4, 0.25), np.full(4, 0.25), [1.0, 0, 0, 0],
        ])
        env.step(full_actions(env, obs, tree=tree))
        assert len(env._pending_projects) == 1
        region, beds, remaining = env._pending_projects[0]
        assert region == 0 and beds == 1
        assert remaining == int(np.ceil(0.5 + 2.0 * 1))

    def test_beds_arrive_after_build_time(self):
        env = tiny_env([hperson(i, region=i % 4) for i in range(4)],
                       sick_insured_coeff=0.0, sick_health_coeff=0.0, beds_per_region=1)
        obs = env.reset(0)
        share = 3.1e7 / env.config.planner_budget
        tree = np.concatenate([[0.0, 0.0, share, 1.0 - share], np.full(4, 0.25), np.full(4, 0.25), [1.0, 0, 0, 0]])
        obs, _, _ = env.step(full_actions(env, obs, tree=tree))
        assert env._beds[0] == 1
        for _ in range(3):
            obs, _, _ = env.step(full_actions(env, obs))
        assert env._beds[0] == 2  # project finished

    def test_subsidy_lowers_effective_premium(self):
        people = [hperson(0, region=0, ftotval=1.0), hperson(1, region=0, ftotval=1.0)]
        env = tiny_env(people, sick_insured_coeff=0.0, sick_health_coeff=0.0, premium_period=6, planner_period=6)
        obs = env.reset(0)
        tree = np.concatenate([[1.0, 0.0, 0.0, 0.0], [1.0, 0, 0, 0], np.full(4, 0.25), np.full(4, 0.25)])
        env.step(full_actions(env, obs, premiums=1.0, tree=tree))
        # Income ~1 against premium 1000: without the subsidy nobody insures.
        assert env._insured.all()

    def test_non_simplex_rejected(self):
        env = tiny_env([hperson(0)])
        obs = env.reset(0)
        bad = np.concatenate([[0.5, 0.5, 0.5, 0.5], np.full(12, 0.25)])
        with pytest.raises(ContractError):
            env.step(full_actions(env, obs, tree=bad))


class TestInsurerAccounting:
    def test_premium_income_no_hospitalizations(self):
        env = tiny_env([hperson(i, ftotval=1e9) for i in range(10)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        _, comps, _ = env.step(full_actions(env, obs, premiums=0.5))
        assert comps.reward_components[0] == pytest.approx(5000.0)

    def test_nobody_insured_zero_profit(self):
        env = tiny_env([hperson(i, ftotval=1e-6) for i in range(5)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        _, comps, _ = env.step(full_actions(env, obs, premiums=1.0))
        assert comps.reward_components[0] == 0.0

    def test_hospitalized_insured_costs_insurer(self):
        env = tiny_env([hperson(0, health=5.0, ftotval=1e9)], beds_per_region=1,
                       sick_insured_coeff=0.0, sick_health_coeff=1.0,
                       terminate_curve=TransitionCurve(offset=0.0, base=1.0, sign=0.0))
        obs = env.reset(0)
        obs, _, _ = env.step(full_actions(env, obs, premiums=0.0))  # insured for free, falls ill
        assert env._status[0] == H.ILL and env._insured[0]
        _, comps, _ = env.step(full_actions(env, obs))
        assert comps.reward_components[0] == pytest.approx(-env.config.hospital_cost)

    def test_financial_failure_on_negative_cumulative_profit(self):
        env = tiny_env([hperson(0, health=5.0, ftotval=1e9)], beds_per_region=1,
                       sick_insured_coeff=0.0, sick_health_coeff=1.0,
                       terminate_curve=TransitionCurve(offset=0.0, base=1.0, sign=0.0))
        obs = env.reset(0)
        obs, _, term = env.step(full_actions(env, obs, premiums=0.0))
        assert term is None
        _, _, term = env.step(full_actions(env, obs))
        assert term is Termination.FINANCIAL_FAILURE


class TestComponentsAndConservation:
    def test_regional_insured_counts(self):
        people = [hperson(i, region=0, ftotval=1e9 if i < 4 else 1e-9) for i in range(10)]
        env = tiny_env(people, sick_insured_coeff=0.0, sick_health_coeff=0.0)
        obs = env.reset(0)
        _, comps, _ = env.step(full_actions(env, obs, premiums=0.5))
        assert comps.fairness_components[0] == 4  # insured in region 0
        assert comps.fairness_components[1] == 10  # population of region 0

    def test_no_terminations_flags_zero_mortality_rate(self):
        env = tiny_env([hperson(i) for i in range(4)], sick_insured_coeff=0.0, sick_health_coeff=0.0)
        result = run_episode(
            env,
            {
                H.INSURANCE: ConstantFillPolicy(0.5),
                H.HOSPITAL: RandomScorePolicy(0),
                H.PLANNER: ConstantPolicy(np.concatenate([[0, 0, 0, 1.0], np.full(12, 0.25)])),
            },
            0,
            env.default_success_spec(),
        )
        assert result.total_rewards[3] == 0.0
        assert any("mortality" in flag for flag in result.zero_rate_flags)

    def test_population_size_constant_under_deaths(self):
        people = [hperson(i, region=i % 4, health=5.0) for i in range(20)]
        env = tiny_env(
            people,
            beds_per_region=0,
            sick_insured_coeff=0.8,
            sick_health_coeff=0.2,
            mortality_curve=TransitionCurve(offset=1.0, base=1.0, sign=0.0),  # every termination is a death
            horizon=10,
        )
        obs = env.reset(0)
        deaths = 0
        for _ in range(10):
            obs, comps, term = env.step(full_actions(env, obs, premiums=1.0))
            deaths += comps.reward_components[3]
            assert env._store.size == 20
            assert (env._status == H.HEALTHY).sum() + (env._status == H.ILL).sum() == 20
            if term:
                break
        assert deaths > 0

    def test_replacement_keeps_region(self):
        people = [hperson(i, region=i % 4, health=5.0) for i in range(8)]
        env = tiny_env(
            people,
            beds_per_region=0,
            sick_insured_coeff=1.0,
            sick_health_coeff=0.0,
            mortality_curve=TransitionCurve(offset=1.0, base=1.0, sign=0.0),
            horizon=6,
        )
        obs = env.reset(0)
        regions_before = env._region.copy()
        for _ in range(5):
            obs, _, term = env.step(full_actions(env, obs, premiums=1.0))
            if term:
                break
        assert np.array_equal(env._region, regions_before)

    def test_determinism(self):
        def run_once():
            env = tiny_env([hperson(i, region=i % 4, health=3.0 + (i % 3)) for i in range(16)], horizon=20,
                           improve_deltas={"HEALTHX": (-0.05, 1.0, 5.0)})
            pols = {
                H.INSURANCE: ConstantFillPolicy(0.4),
                H.HOSPITAL: RandomScorePolicy(9),
                H.PLANNER: ConstantPolicy(np.concatenate([[0.25, 0.25, 0.25, 0.25], np.full(12, 0.25)])),
            }
            return run_episode(env, pols, 13, env.default_success_spec())

        a, b = run_once(), run_once()
        assert a.total_rewards.tobytes() == b.total_rewards.tobytes()
        assert a.fairness_violations.tobytes() == b.fairness_violations.tobytes()
        assert a.success == b.success
