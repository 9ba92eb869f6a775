"""Monthly simulation loop, result records, CSV outputs, and the
multi-system comparison harness.

Each month runs, in order: (1) policy proposal on the adjustment cadence,
(2) household decisions, (3) labor realization and production, (4) taxation
and income crediting, (5) consumption in a shuffled order, (6) mismatch-driven
wage/price adjustment, (7) recording, (8) quarterly reflection, (9) annual
inflation/unemployment, Taylor-rule update, and interest accrual.

Determinism: a single numpy Generator seeded from the config drives every
draw in a fixed order (initial wages, initial savings, then per month: labor
in household order, the consumption shuffle, wage steps in household order,
the price step). With the rule-based backend, or an LLM backend in replay or
scripted mode, two runs produce byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from taxsim import metrics
from taxsim.config import ConfigError, GatewayConfig, SimConfig
from taxsim.economy import (
    HOURS_PER_MONTH,
    AdjustmentParams,
    HouseholdState,
    MarketState,
    TaxSchedule,
    accrue_interest,
    adjust_wages_and_price,
    apply_taxation,
    compute_mismatch,
    execute_consumption,
    produce,
    update_interest_rate,
)
from taxsim.gateway import ChatGateway
from taxsim.households import (
    DEFAULT_DECISION,
    DECREASED,
    INCREASED,
    UNCHANGED,
    Decision,
    DecisionContext,
    HouseholdBackend,
    LLMBackend,
    MemoryEntry,
    MemoryPool,
    RuleBasedBackend,
    decide,
    reflect,
)
from taxsim.metrics import MetricSnapshot
from taxsim.personas import load_personas, roster_for
from taxsim.policies import (
    FreeMarketPolicy,
    PolicyObservation,
    SaezOptimalPolicy,
    TaxAgentPolicy,
    TaxPolicy,
    USFederalPolicy,
    free_market_schedule,
    us_federal_schedule,
)

START_YEAR = 2001  # month 1 renders as "2001.01"


@dataclass
class MonthRecord:
    """End-of-month snapshot of the market, the schedule in force, and the
    aggregate flows of the month."""

    month: int
    price: float
    inventory: float
    interest_rate: float
    rates: tuple[float, ...]
    total_pretax_income: float
    total_tax: float
    total_consumption: float
    total_wealth: float
    metrics: MetricSnapshot


@dataclass
class AnnualRecord:
    year: int
    inflation: float
    unemployment: float


@dataclass
class HouseholdMonthRow:
    month: int
    household_id: int
    hourly_wage: float
    savings: float
    work_propensity: float
    consumption_propensity: float
    employed: int
    pretax_income: float
    tax_paid: float
    posttax_income: float
    consumption_spent: float


@dataclass
class SimulationResult:
    config: SimConfig
    month_records: list[MonthRecord]
    annual_records: list[AnnualRecord]
    household_rows: list[HouseholdMonthRow]
    summary: dict

    def write_outputs(self, out_dir: str | Path) -> Path:
        """Write monthly.csv, annual.csv, summary.json, and (when enabled)
        households.csv under ``out_dir``; numbers carry six decimals."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_monthly_csv(out / "monthly.csv", self.month_records)
        _write_annual_csv(out / "annual.csv", self.annual_records)
        if self.config.write_households:
            _write_households_csv(out / "households.csv", self.household_rows)
        (out / "summary.json").write_text(
            json.dumps(self.summary, indent=2) + "\n", encoding="utf-8"
        )
        return out


def month_label(month: int) -> str:
    """Calendar label for 1-based simulation month m, e.g. 3 -> "2001.03"."""
    year = START_YEAR + (month - 1) // 12
    return f"{year}.{(month - 1) % 12 + 1:02d}"


def _direction(current: float, previous: float | None) -> str:
    if previous is None or current == previous:
        return UNCHANGED
    return INCREASED if current > previous else DECREASED


def initial_schedule(tax_system: str) -> TaxSchedule:
    """Schedule in force before the first proposal: zero rates for the free
    market, the federal rates for every other system."""
    return free_market_schedule() if tax_system == "free" else us_federal_schedule()


def build_policy(config: SimConfig, gateway: ChatGateway | None) -> TaxPolicy:
    if config.tax_system == "free":
        return FreeMarketPolicy()
    if config.tax_system == "us_federal":
        return USFederalPolicy()
    if config.tax_system == "saez":
        return SaezOptimalPolicy(config.saez)
    if config.tax_system == "tax_agent":
        if gateway is None:
            raise ConfigError("tax_agent needs a chat gateway")
        return TaxAgentPolicy(gateway, config.tax_agent)
    raise ConfigError(f"unknown tax system {config.tax_system!r}")


def build_backend(config: SimConfig, gateway: ChatGateway | None) -> HouseholdBackend:
    if config.household_backend == "rule_based":
        return RuleBasedBackend()
    if gateway is None:
        raise ConfigError("llm household backend needs a chat gateway")
    return LLMBackend(gateway, config.household_llm)


def build_gateway(config: GatewayConfig) -> ChatGateway:
    if config.mode == "scripted":
        raise ConfigError(
            "scripted gateways hold an in-memory queue; construct one directly "
            "and pass it to run()"
        )
    return ChatGateway(
        config.mode,
        cache_path=config.cache_path or None,
        endpoint=config.endpoint,
        api_key_env=config.api_key_env,
        timeout=config.timeout_seconds,
    )


def run(
    config: SimConfig,
    gateway: ChatGateway | None = None,
    event_log: list[tuple[int, str]] | None = None,
) -> SimulationResult:
    """Execute a full simulation and return every record.

    ``gateway`` is only consulted when the config needs LLM calls (tax_agent
    system or llm household backend); passing one in overrides the config's
    gateway section. ``event_log`` (for tests) receives (month, step) pairs
    in execution order.
    """
    config.validate()
    needs_gateway = (
        config.tax_system == "tax_agent" or config.household_backend == "llm"
    )
    if needs_gateway and gateway is None:
        gateway = build_gateway(config.gateway)

    personas = roster_for(config.n_households, load_personas(config.persona_path or None))
    rng = np.random.default_rng(config.seed)
    n = config.n_households

    wages = rng.lognormal(math.log(config.initial.wage_median), config.initial.wage_sigma, n)
    savings = rng.lognormal(
        math.log(config.initial.savings_median), config.initial.savings_sigma, n
    )
    households = [
        HouseholdState(
            id=i,
            persona=personas[i],
            hourly_wage=float(wages[i]),
            savings=float(savings[i]),
            work_propensity=DEFAULT_DECISION.work_propensity,
            consumption_propensity=DEFAULT_DECISION.consumption_propensity,
            memory=MemoryPool(),
        )
        for i in range(n)
    ]
    market = MarketState(
        price=config.initial.price,
        inventory=config.initial.inventory,
        interest_rate=config.initial.interest_rate,
        productivity=config.productivity,
    )
    policy = build_policy(config, gateway)
    backend = build_backend(config, gateway)
    params = config.adjustment
    per_capita = config.productivity_metric == "per_capita"

    schedule = initial_schedule(config.tax_system)
    schedule_history: list[TaxSchedule] = [schedule]  # month-0 bootstrap entry
    productivity_history = [0.0]
    equality_history = [0.0]
    last_incomes = [0.0] * n

    price_history: list[float] = []
    labor_history: list[list[int]] = []
    month_records: list[MonthRecord] = []
    annual_records: list[AnnualRecord] = []
    household_rows: list[HouseholdMonthRow] = []
    previous_expected: list[float | None] = [None] * n
    previous_price: float | None = None

    def log(month: int, step: str) -> None:
        if event_log is not None:
            event_log.append((month, step))

    for month in range(1, config.months + 1):
        date = month_label(month)

        # (1) policy proposal on the adjustment cadence, observing last month
        if (month - 1) % config.adjust_period_months == 0:
            observation = PolicyObservation(
                month=month - 1,
                incomes=tuple(last_incomes),
                wealth=tuple(hh.savings for hh in households),
                schedule_history=tuple(schedule_history),
                productivity_history=tuple(productivity_history),
                equality_history=tuple(equality_history),
            )
            schedule = policy.propose(observation)
            log(month, "propose")

        # (2) household decisions from start-of-month state
        decision_price = market.price
        for i, hh in enumerate(households):
            expected = HOURS_PER_MONTH * hh.hourly_wage
            context = DecisionContext(
                date=date,
                persona=hh.persona,
                expected_income=expected,
                previous_schedule=schedule_history[-1],
                current_schedule=schedule,
                average_price=decision_price,
                savings=hh.savings,
                interest_rate=market.interest_rate,
                income_direction=_direction(expected, previous_expected[i]),
                price_direction=_direction(decision_price, previous_price),
                last_consumption=hh.consumption_spent,
                reflection_note=hh.reflection_note,
            )
            fallback = Decision(hh.work_propensity, hh.consumption_propensity)
            decision = decide(backend, context, fallback)
            hh.work_propensity = decision.work_propensity
            hh.consumption_propensity = decision.consumption_propensity
            previous_expected[i] = expected
        previous_price = decision_price
        log(month, "decide")

        # (3) labor realization, then production
        labor_draws = rng.random(n)
        for hh, draw in zip(households, labor_draws):
            hh.employed = 1 if draw < hh.work_propensity else 0
        labor_history.append([hh.employed for hh in households])
        _, pretax_incomes = produce(households, market)
        log(month, "produce")

        # (4) taxation with even redistribution; credit post-tax income
        posttax, taxes, _ = apply_taxation(schedule, pretax_incomes)
        for hh, net, tax in zip(households, posttax, taxes):
            hh.tax_paid = tax
            hh.posttax_income = net
            hh.savings += net
        log(month, "tax")

        # (5) consumption against post-production inventory
        available_supply = market.inventory
        _, total_demand = execute_consumption(households, market, rng)
        log(month, "consume")

        # (6) mismatch uses intended demand vs the pre-consumption inventory
        mismatch = compute_mismatch(total_demand, available_supply)
        adjust_wages_and_price(households, market, mismatch, params, rng)
        log(month, "adjust")

        # (7) record end-of-month state and metrics over wealth
        wealth = [hh.savings for hh in households]
        equality_score = metrics.equality(wealth)
        productivity_score = metrics.productivity(wealth, per_capita=per_capita)
        snapshot = MetricSnapshot(
            month=month,
            gini=metrics.gini(wealth),
            equality=equality_score,
            productivity=productivity_score,
            social_outcome=metrics.social_outcome(equality_score, productivity_score),
        )
        month_records.append(
            MonthRecord(
                month=month,
                price=market.price,
                inventory=market.inventory,
                interest_rate=market.interest_rate,
                rates=schedule.rates,
                total_pretax_income=float(sum(pretax_incomes)),
                total_tax=float(sum(taxes)),
                total_consumption=float(sum(hh.consumption_spent for hh in households)),
                total_wealth=float(sum(wealth)),
                metrics=snapshot,
            )
        )
        for hh in households:
            household_rows.append(
                HouseholdMonthRow(
                    month=month,
                    household_id=hh.id,
                    hourly_wage=hh.hourly_wage,
                    savings=hh.savings,
                    work_propensity=hh.work_propensity,
                    consumption_propensity=hh.consumption_propensity,
                    employed=hh.employed,
                    pretax_income=hh.pretax_income,
                    tax_paid=hh.tax_paid,
                    posttax_income=hh.posttax_income,
                    consumption_spent=hh.consumption_spent,
                )
            )
            assert hh.memory is not None
            hh.memory.add(
                MemoryEntry(
                    date=date,
                    work_propensity=hh.work_propensity,
                    consumption_propensity=hh.consumption_propensity,
                    pretax_income=hh.pretax_income,
                    posttax_income=hh.posttax_income,
                    consumption=hh.consumption_spent,
                )
            )
        schedule_history.append(schedule)
        productivity_history.append(snapshot.productivity)
        equality_history.append(snapshot.equality)
        price_history.append(market.price)
        last_incomes = pretax_incomes
        log(month, "record")

        # (8) quarterly reflection
        if month % config.reflection_period_months == 0:
            for hh in households:
                assert hh.memory is not None
                hh.reflection_note = reflect(backend, hh.memory, hh.reflection_note)
            log(month, "reflect")

        # (9) annual metrics, Taylor-rule update, interest accrual
        if month % 12 == 0:
            inflation = metrics.annual_inflation(price_history)
            unemployment = metrics.annual_unemployment(labor_history[-12:])
            market.interest_rate = update_interest_rate(params, inflation, unemployment)
            accrue_interest(households, market.interest_rate)
            annual_records.append(
                AnnualRecord(
                    year=month // 12, inflation=inflation, unemployment=unemployment
                )
            )
            snapshot.inflation = inflation
            snapshot.unemployment = unemployment
            log(month, "annual")

    final = month_records[-1].metrics
    summary = {
        "tax_system": config.tax_system,
        "household_backend": config.household_backend,
        "seed": config.seed,
        "n_households": config.n_households,
        "months": config.months,
        "final_gini": round(final.gini, 6),
        "final_equality": round(final.equality, 6),
        "final_productivity": round(final.productivity, 6),
        "final_social_outcome": round(final.social_outcome, 6),
        "mean_annual_inflation": round(
            float(np.mean([a.inflation for a in annual_records])) if annual_records else 0.0, 6
        ),
        "mean_annual_unemployment": round(
            float(np.mean([a.unemployment for a in annual_records])) if annual_records else 0.0, 6
        ),
    }
    return SimulationResult(
        config=config,
        month_records=month_records,
        annual_records=annual_records,
        household_rows=household_rows,
        summary=summary,
    )


@dataclass
class ComparisonRow:
    tax_system: str
    seed: int
    final_gini: float
    final_equality: float
    final_productivity: float
    final_social_outcome: float


@dataclass
class ComparisonResult:
    rows: list[ComparisonRow]
    results: dict[str, SimulationResult] = field(default_factory=dict)

    def mean_social_outcomes(self) -> dict[str, float]:
        by_system: dict[str, list[float]] = {}
        for row in self.rows:
            by_system.setdefault(row.tax_system, []).append(row.final_social_outcome)
        return {
            system: float(np.mean(values)) for system, values in by_system.items()
        }


def compare(
    configs: Sequence[SimConfig],
    gateway_factory: Callable[[SimConfig], ChatGateway | None] | None = None,
) -> ComparisonResult:
    """Run several configs that share (n_households, months, seed) and
    collect their final metrics side by side."""
    if not configs:
        raise ValueError("compare needs at least one config")
    head = configs[0]
    for cfg in configs[1:]:
        if (
            cfg.n_households != head.n_households
            or cfg.months != head.months
            or cfg.seed != head.seed
        ):
            raise ValueError("compared configs must share n_households, months, seed")
    result = ComparisonResult(rows=[])
    for cfg in configs:
        gateway = gateway_factory(cfg) if gateway_factory else None
        sim = run(cfg, gateway=gateway)
        final = sim.month_records[-1].metrics
        result.rows.append(
            ComparisonRow(
                tax_system=cfg.tax_system,
                seed=cfg.seed,
                final_gini=final.gini,
                final_equality=final.equality,
                final_productivity=final.productivity,
                final_social_outcome=final.social_outcome,
            )
        )
        result.results[cfg.tax_system] = sim
    return result


def sweep(
    base: SimConfig,
    systems: Sequence[str],
    seeds: Sequence[int],
    gateway_factory: Callable[[SimConfig], ChatGateway | None] | None = None,
) -> list[ComparisonRow]:
    """Cross systems with seeds, one comparison per seed, rows flattened."""
    rows: list[ComparisonRow] = []
    for seed in seeds:
        configs = [
            replace(base, tax_system=system, seed=seed) for system in systems
        ]
        rows.extend(compare(configs, gateway_factory=gateway_factory).rows)
    return rows


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _write_monthly_csv(path: Path, records: list[MonthRecord]) -> None:
    n_rates = len(records[0].rates) if records else 7
    header = (
        ["month", "price", "inventory", "interest_rate"]
        + [f"rate_{k + 1}" for k in range(n_rates)]
        + ["gini", "equality", "productivity", "social_outcome"]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in records:
            writer.writerow(
                [rec.month, _fmt(rec.price), _fmt(rec.inventory), _fmt(rec.interest_rate)]
                + [_fmt(r) for r in rec.rates]
                + [
                    _fmt(rec.metrics.gini),
                    _fmt(rec.metrics.equality),
                    _fmt(rec.metrics.productivity),
                    _fmt(rec.metrics.social_outcome),
                ]
            )


def _write_annual_csv(path: Path, records: list[AnnualRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "inflation", "unemployment"])
        for rec in records:
            writer.writerow([rec.year, _fmt(rec.inflation), _fmt(rec.unemployment)])


def _write_households_csv(path: Path, rows: list[HouseholdMonthRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "month",
                "household_id",
                "hourly_wage",
                "savings",
                "work_propensity",
                "consumption_propensity",
                "employed",
                "pretax_income",
                "tax_paid",
                "posttax_income",
                "consumption_spent",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.month,
                    row.household_id,
                    _fmt(row.hourly_wage),
                    _fmt(row.savings),
                    _fmt(row.work_propensity),
                    _fmt(row.consumption_propensity),
                    row.employed,
                    _fmt(row.pretax_income),
                    _fmt(row.tax_paid),
                    _fmt(row.posttax_income),
                    _fmt(row.consumption_spent),
                ]
            )
