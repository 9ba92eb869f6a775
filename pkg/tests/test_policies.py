from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from helpers import oracle_saez_rates, scripted_gateway
from taxsim.economy import TaxSchedule
from taxsim.gateway import ChatGateway, ReplayMissError
from taxsim.policies import (
    DEFAULT_BRACKETS,
    US_FEDERAL_RATES,
    DegenerateIncomesError,
    EmptyTailError,
    FreeMarketPolicy,
    PolicyObservation,
    SaezOptimalPolicy,
    SaezParams,
    TaxAgentConfig,
    TaxAgentPolicy,
    TaxReplyParseError,
    USFederalPolicy,
    build_tax_prompt,
    free_market_schedule,
    marginal_rate,
    pareto_parameter,
    parse_tax_reply,
    saez_schedule,
    top_rate,
    us_federal_schedule,
)


def observation(incomes=(), wealth=None, schedules=(), prod=(0.0,), eq=(0.0,), month=0):
    incomes = tuple(incomes)
    wealth = tuple(wealth) if wealth is not None else tuple(1000.0 for _ in incomes)
    return PolicyObservation(
        month=month,
        incomes=incomes,
        wealth=wealth,
        schedule_history=tuple(schedules),
        productivity_history=tuple(prod),
        equality_history=tuple(eq),
    )


class TestFixedPolicies:
    def test_free_market_rates_are_all_zero(self):
        schedule = FreeMarketPolicy().propose(observation(incomes=[1.0], wealth=[1.0]))
        assert schedule.rates == (0.0,) * 7
        assert schedule.thresholds == DEFAULT_BRACKETS

    def test_us_federal_rates(self):
        schedule = USFederalPolicy().propose(observation(incomes=[1.0], wealth=[1.0]))
        assert schedule.rates == US_FEDERAL_RATES
        assert schedule.thresholds == DEFAULT_BRACKETS


class TestParetoParameter:
    def test_tail_mean_double_threshold(self):
        assert pareto_parameter([80_000.0, 10.0], 40_000.0) == pytest.approx(2.0)

    def test_tail_mean_1p5x_threshold(self):
        assert pareto_parameter([60_000.0], 40_000.0) == pytest.approx(3.0)

    def test_huge_tail_mean_approaches_one(self):
        assert pareto_parameter([1e13], 40_000.0) == pytest.approx(1.0, abs=1e-6)

    def test_empty_tail_raises(self):
        with pytest.raises(EmptyTailError):
            pareto_parameter([100.0, 200.0], 40_000.0)


class TestTopRate:
    def test_worked_example(self):
        assert top_rate(2.0, 0.25) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_zero_elasticity_gives_full_rate(self):
        assert top_rate(2.0, 0.0) == 1.0
        assert top_rate(17.3, 0.0) == 1.0

    def test_second_example(self):
        assert top_rate(1.5, 0.5) == pytest.approx(1.0 / 1.75)

    @given(
        a=st.floats(min_value=1.0, max_value=100.0),
        e1=st.floats(min_value=0.0, max_value=2.0),
        e2=st.floats(min_value=0.0, max_value=2.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_strictly_decreasing_in_elasticity(self, a, e1, e2):
        assume(e2 - e1 > 1e-6)
        assert top_rate(a, e1) > top_rate(a, e2)

    @given(
        a1=st.floats(min_value=1.0, max_value=100.0),
        a2=st.floats(min_value=1.0, max_value=100.0),
        e=st.floats(min_value=0.01, max_value=2.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_strictly_decreasing_in_pareto_parameter(self, a1, a2, e):
        assume(a2 - a1 > 1e-6)
        assert top_rate(a1, e) > top_rate(a2, e)


class TestMarginalRate:
    def test_zero_elasticity_reduces_to_one_minus_cdf(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            g = float(rng.uniform(0, 1))
            density = float(rng.uniform(0, 0.01))
            z = float(rng.uniform(0, 50_000))
            assert marginal_rate(g, density, 0.0, z) == pytest.approx(1.0 - g, abs=1e-12)

    def test_worked_example(self):
        value = marginal_rate(0.9, 0.0001, 0.25, 10_000.0)
        assert value == pytest.approx((0.1 + 0.25) / 1.000025, abs=1e-9)
        assert value == pytest.approx(0.34999, abs=1e-5)

    def test_clamp_boundaries(self):
        assert marginal_rate(1.0, 0.0, 0.7, 100.0) == 0.0  # 1 - G = 0
        assert marginal_rate(0.0, 0.0, 0.0, 0.0) == 1.0


class TestSaezSchedule:
    def test_two_point_distribution_matches_oracle(self):
        incomes = [1000.0] * 25 + [50_000.0] * 25
        params = SaezParams(elasticity=0.25)
        schedule = saez_schedule(incomes, DEFAULT_BRACKETS, params)
        expected = oracle_saez_rates(incomes, DEFAULT_BRACKETS, 0.25)
        assert schedule.thresholds == DEFAULT_BRACKETS
        for mine, want in zip(schedule.rates, expected):
            assert mine == pytest.approx(want, abs=1e-9)

    def test_random_distributions_match_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            incomes = rng.lognormal(8.5, 1.2, 60).tolist()
            schedule = saez_schedule(
                incomes, DEFAULT_BRACKETS, SaezParams(elasticity=0.4),
                previous=us_federal_schedule(),
            )
            expected = oracle_saez_rates(
                incomes, DEFAULT_BRACKETS, 0.4, previous_top=US_FEDERAL_RATES[-1]
            )
            for mine, want in zip(schedule.rates, expected):
                assert mine == pytest.approx(want, abs=1e-9)

    def test_uniform_incomes_zero_elasticity_tracks_cdf(self):
        rng = np.random.default_rng(5)
        incomes = rng.uniform(0.0, 42_525.0, 20_000).tolist()
        schedule = saez_schedule(
            incomes, DEFAULT_BRACKETS, SaezParams(elasticity=0.0),
            previous=us_federal_schedule(),
        )
        for k in range(6):
            midpoint = (DEFAULT_BRACKETS[k] + DEFAULT_BRACKETS[k + 1]) / 2.0
            assert schedule.rates[k] == pytest.approx(1.0 - midpoint / 42_525.0, abs=0.02)

    def test_empty_tail_keeps_previous_top_rate(self):
        incomes = [500.0, 700.0, 900.0]
        previous = us_federal_schedule()
        schedule = saez_schedule(incomes, DEFAULT_BRACKETS, SaezParams(), previous=previous)
        assert schedule.rates[-1] == previous.rates[-1]

    def test_empty_tail_without_previous_raises(self):
        with pytest.raises(EmptyTailError):
            saez_schedule([500.0, 700.0], DEFAULT_BRACKETS, SaezParams())

    def test_degenerate_incomes_use_zero_elasticity(self):
        incomes = [5000.0] * 10
        schedule = saez_schedule(incomes, DEFAULT_BRACKETS, SaezParams(elasticity=0.5),
                                 previous=us_federal_schedule())
        # all mass sits in bracket 2; below it 1 - G = 1, above it 1 - G = 0
        assert schedule.rates[0] == pytest.approx(1.0)
        assert schedule.rates[3] == pytest.approx(0.0)

    def test_fewer_than_two_positive_incomes_raises(self):
        with pytest.raises(DegenerateIncomesError):
            saez_schedule([0.0, 0.0, 123.0], DEFAULT_BRACKETS, SaezParams())

    def test_policy_falls_back_to_previous_schedule(self):
        policy = SaezOptimalPolicy()
        previous = us_federal_schedule()
        obs = observation(incomes=[0.0] * 5, wealth=[1.0] * 5, schedules=[previous])
        assert policy.propose(obs) == previous

    def test_policy_reestimates_each_period(self):
        policy = SaezOptimalPolicy(SaezParams(elasticity=0.25))
        obs_low = observation(
            incomes=[900.0] * 20 + [50_000.0] * 5,
            schedules=[us_federal_schedule()],
        )
        obs_high = observation(
            incomes=[30_000.0] * 20 + [90_000.0] * 5,
            schedules=[us_federal_schedule()],
        )
        assert policy.propose(obs_low).rates != policy.propose(obs_high).rates


class TestBuildTaxPrompt:
    def test_golden_prompt(self, fixtures_dir):
        data = json.loads((fixtures_dir / "planner_observation.json").read_text())
        obs = PolicyObservation(
            month=data["month"],
            incomes=tuple(data["incomes"]),
            wealth=tuple(data["wealth"]),
            schedule_history=tuple(
                TaxSchedule(DEFAULT_BRACKETS, rates)
                for rates in data["schedule_rates_history"]
            ),
            productivity_history=tuple(data["productivity_history"]),
            equality_history=tuple(data["equality_history"]),
        )
        expected = (fixtures_dir / "planner_prompt_golden.txt").read_text()[:-1]
        assert build_tax_prompt(obs) == expected

    def test_required_fields_present(self):
        obs = observation(incomes=[0.0, 1200.5], wealth=[100.0, 200.0],
                          schedules=[us_federal_schedule()])
        prompt = build_tax_prompt(obs)
        assert "[0.00, 808.33, 3289.58, 7016.67, 13393.75, 17008.33, 42525.00]" in prompt
        assert "intervals of 0.01" in prompt
        assert "Provide your decision in a JSON format." in prompt
        assert "$[0.0, 1200.5]" in prompt

    def test_month_zero_histories_render_with_leading_zero(self):
        obs = observation(incomes=[0.0] * 3, wealth=[5.0] * 3,
                          schedules=[us_federal_schedule()], prod=[0.0], eq=[0.0])
        prompt = build_tax_prompt(obs)
        assert "[ (0.0)]" in prompt

    def test_non_worker_incomes_render_as_zero_point_zero(self):
        obs = observation(incomes=[0.0, 810.0, 0.0], wealth=[1.0, 2.0, 3.0],
                          schedules=[us_federal_schedule()])
        assert "$[0.0, 810.0, 0.0]" in build_tax_prompt(obs)


class TestParseTaxReply:
    def test_plain_list(self):
        rates = parse_tax_reply("[0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]")
        assert rates == (0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45)

    def test_list_with_chatter(self):
        rates = parse_tax_reply(
            "sure! [0.10,0.12,0.22,0.24,0.32,0.35,0.37] hope this helps"
        )
        assert rates == US_FEDERAL_RATES

    def test_wrong_arity_rejected(self):
        with pytest.raises(TaxReplyParseError):
            parse_tax_reply("[0.1, 0.2]")

    def test_no_numbers_rejected(self):
        with pytest.raises(TaxReplyParseError):
            parse_tax_reply("I would rather not set any taxes today.")

    def test_out_of_range_values_clamped(self):
        rates = parse_tax_reply("[-0.5, 1.5, 0.5, 0.5, 0.5, 0.5, 0.5]")
        assert rates[0] == 0.0
        assert rates[1] == 1.0

    def test_values_snapped_to_001_grid(self):
        rates = parse_tax_reply("[0.123, 0.456, 0.1, 0.1, 0.1, 0.1, 0.1]")
        assert rates[0] == pytest.approx(0.12)
        assert rates[1] == pytest.approx(0.46)

    def test_first_length_seven_list_wins(self):
        text = "[1, 2] then [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1] then [0.9]*7"
        assert parse_tax_reply(text) == (0.1,) * 7

    def test_json_object_wrapped_list(self):
        text = '{"decision": [0.05, 0.1, 0.2, 0.25, 0.3, 0.35, 0.4]}'
        assert parse_tax_reply(text) == (0.05, 0.1, 0.2, 0.25, 0.3, 0.35, 0.4)

    @given(st.lists(st.integers(0, 100), min_size=7, max_size=7))
    @settings(max_examples=100, deadline=None)
    def test_render_parse_round_trip_on_grid(self, cents):
        rates = [c / 100.0 for c in cents]
        rendered = "[" + ", ".join(f"{r:.2f}" for r in rates) + "]"
        parsed = parse_tax_reply(rendered)
        for got, want in zip(parsed, rates):
            assert got == pytest.approx(want, abs=1e-12)


class TestTaxAgentPolicy:
    def test_scripted_reply_becomes_schedule(self):
        gateway = scripted_gateway(["[0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]"])
        policy = TaxAgentPolicy(gateway, TaxAgentConfig(max_retries=1))
        schedule = policy.propose(observation(incomes=[1.0], wealth=[1.0],
                                              schedules=[us_federal_schedule()]))
        assert schedule.rates == (0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45)
        assert schedule.thresholds == DEFAULT_BRACKETS

    def test_malformed_replies_fall_back_to_previous(self):
        gateway = scripted_gateway(["nope", "[1,2]", "still no"])
        policy = TaxAgentPolicy(gateway, TaxAgentConfig(max_retries=3))
        previous = free_market_schedule()
        obs = observation(incomes=[1.0], wealth=[1.0], schedules=[previous])
        assert policy.propose(obs) == previous

    def test_retry_consumes_next_scripted_reply(self):
        gateway = scripted_gateway(["garbage", "[0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2]"])
        policy = TaxAgentPolicy(gateway, TaxAgentConfig(max_retries=2))
        obs = observation(incomes=[1.0], wealth=[1.0], schedules=[us_federal_schedule()])
        assert policy.propose(obs).rates == (0.2,) * 7

    def test_replay_miss_propagates(self, tmp_path):
        cache = tmp_path / "cache.jsonl"
        cache.write_text("")
        gateway = ChatGateway("replay", cache_path=cache)
        policy = TaxAgentPolicy(gateway, TaxAgentConfig(max_retries=3))
        obs = observation(incomes=[1.0], wealth=[1.0], schedules=[us_federal_schedule()])
        with pytest.raises(ReplayMissError):
            policy.propose(obs)


class TestScheduleInvariants:
    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=60, deadline=None)
    def test_every_proposal_is_a_valid_schedule(self, seed):
        rng = np.random.default_rng(seed)
        incomes = rng.lognormal(8.0, 1.5, 30).tolist()
        obs = observation(incomes=incomes, wealth=incomes,
                          schedules=[us_federal_schedule()])
        for policy in (FreeMarketPolicy(), USFederalPolicy(), SaezOptimalPolicy()):
            schedule = policy.propose(obs)
            assert schedule.thresholds == DEFAULT_BRACKETS
            assert all(0.0 <= r <= 1.0 for r in schedule.rates)
