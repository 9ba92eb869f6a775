"""Core domain types and the four market mechanisms: production, bracketed
taxation with even redistribution, inventory-bounded consumption, and the
financial channel (interest accrual, Taylor-rule rate setting, mismatch-driven
wage/price adjustment).

Everything here is a pure state transition over explicit values; the only
mutation is the in-place update of the household/market objects passed in.
Stochastic operations take an explicit numpy Generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - type-only import, avoids a runtime cycle
    from taxsim.households import MemoryPool

HOURS_PER_MONTH = 168  # 21 eight-hour working days


class ScheduleError(ValueError):
    """A tax schedule failed validation."""


def quantize_fraction(value: float, step: str = "0.02") -> float:
    """Clamp ``value`` to [0, 1] and round half-up onto a decimal grid.

    ``step`` is given as a decimal string ("0.02", "0.01") so the grid is
    exact; binary-float division would misround values like 0.83.
    """
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot quantize non-finite value {value!r}")
    clamped = min(max(value, 0.0), 1.0)
    quantum = Decimal(step)
    ticks = (Decimal(repr(clamped)) / quantum).quantize(
        Decimal("1"), rounding=ROUND_HALF_UP
    )
    return float(ticks * quantum)


@dataclass(frozen=True)
class Persona:
    """Identity card of one household: who they are and what they do."""

    name: str
    age: int
    city: str
    occupation: str

    def __post_init__(self) -> None:
        for attr in ("name", "city", "occupation"):
            if not getattr(self, attr):
                raise ValueError(f"persona {attr} must be non-empty")
        if self.age <= 0:
            raise ValueError("persona age must be a positive integer")


@dataclass
class HouseholdState:
    """Mutable per-household economic state, updated month by month.

    Savings never go negative: consumption is capped by wealth and post-tax
    income is nonnegative whenever all marginal rates are <= 1.
    """

    id: int
    persona: Persona
    hourly_wage: float
    savings: float
    work_propensity: float = 0.6
    consumption_propensity: float = 0.4
    employed: int = 0
    pretax_income: float = 0.0
    tax_paid: float = 0.0
    posttax_income: float = 0.0
    consumption_spent: float = 0.0
    reflection_note: str = ""
    memory: "MemoryPool | None" = None

    def __post_init__(self) -> None:
        if self.hourly_wage <= 0:
            raise ValueError("hourly_wage must be > 0")
        if self.savings < 0:
            raise ValueError("savings must be >= 0")
        for attr in ("work_propensity", "consumption_propensity"):
            p = getattr(self, attr)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{attr} must lie in [0, 1]")
        if self.employed not in (0, 1):
            raise ValueError("employed must be 0 or 1")


@dataclass(frozen=True)
class TaxSchedule:
    """Bracketed marginal tax schedule: income inside bracket k, i.e. between
    thresholds[k] and thresholds[k+1], is taxed at rates[k]; the top bracket
    is open-ended."""

    thresholds: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "thresholds", tuple(float(b) for b in self.thresholds))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if len(self.thresholds) != len(self.rates):
            raise ScheduleError("thresholds and rates must have equal length")
        if not self.thresholds:
            raise ScheduleError("schedule must have at least one bracket")
        if self.thresholds[0] != 0.0:
            raise ScheduleError("lowest bracket must start at 0")
        for lo, hi in zip(self.thresholds, self.thresholds[1:]):
            if hi <= lo:
                raise ScheduleError("thresholds must be strictly increasing")
        for rate in self.rates:
            if not 0.0 <= rate <= 1.0:
                raise ScheduleError("every rate must lie in [0, 1]")

    @property
    def num_brackets(self) -> int:
        return len(self.rates)


@dataclass
class MarketState:
    """Aggregate market state for the single consumption good."""

    price: float
    inventory: float = 0.0
    interest_rate: float = 0.0
    productivity: float = 1.0
    last_demand: float = 0.0
    last_supply: float = 0.0
    mismatch: float = 0.0

    def __post_init__(self) -> None:
        if self.price <= 0:
            raise ValueError("price must be > 0")
        if self.inventory < 0:
            raise ValueError("inventory must be >= 0")
        if self.interest_rate < 0:
            raise ValueError("interest_rate must be >= 0")
        if self.productivity <= 0:
            raise ValueError("productivity must be > 0")
        if not -1.0 <= self.mismatch <= 1.0:
            raise ValueError("mismatch must lie in [-1, 1]")


@dataclass(frozen=True)
class AdjustmentParams:
    """Wage/price adjustment caps and Taylor-rule coefficients."""

    max_wage_step: float = 0.05
    max_price_step: float = 0.10
    natural_rate: float = 0.01
    target_inflation: float = 0.02
    inflation_response: float = 0.5
    unemployment_response: float = 0.5
    natural_unemployment: float = 0.04

    def __post_init__(self) -> None:
        for attr in ("max_wage_step", "max_price_step"):
            step = getattr(self, attr)
            if not 0.0 < step <= 1.0:
                raise ValueError(f"{attr} must lie in (0, 1]")


def produce(
    households: Sequence[HouseholdState], market: MarketState
) -> tuple[float, list[float]]:
    """Run the month's production round.

    Every employed household supplies 168 hours of labor; output is hours
    times productivity, added to inventory. Pre-tax income is hours times
    the household's own wage (zero when not working).

    Returns (total supply in goods units, pre-tax incomes by household id).
    """
    supply = 0.0
    incomes: list[float] = []
    for hh in households:
        supply += hh.employed * HOURS_PER_MONTH * market.productivity
        hh.pretax_income = hh.employed * HOURS_PER_MONTH * hh.hourly_wage
        incomes.append(hh.pretax_income)
    market.inventory += supply
    market.last_supply = supply
    return supply, incomes


def compute_tax(schedule: TaxSchedule, income: float) -> float:
    """Tax owed on ``income``: each bracket's slice is taxed at that
    bracket's marginal rate only, so the total is continuous and
    nondecreasing in income."""
    if income < 0:
        raise ValueError("income must be >= 0")
    tax = 0.0
    thresholds = schedule.thresholds
    for k, rate in enumerate(schedule.rates):
        lower = thresholds[k]
        upper = thresholds[k + 1] if k + 1 < len(thresholds) else math.inf
        if income > upper:
            tax += rate * (upper - lower)
        elif income > lower:
            tax += rate * (income - lower)
    return tax


def apply_taxation(
    schedule: TaxSchedule, pretax_incomes: Sequence[float]
) -> tuple[list[float], list[float], float]:
    """Tax every income and redistribute the proceeds evenly.

    Post-tax income is ``z - T(z) + mean(T)``; the even lump-sum transfer
    balances the budget exactly, so total post-tax equals total pre-tax.

    Returns (posttax incomes, taxes, per-household redistribution).
    """
    if not pretax_incomes:
        raise ValueError("need at least one income")
    taxes = [compute_tax(schedule, z) for z in pretax_incomes]
    redistribution = sum(taxes) / len(taxes)
    posttax = [z - t + redistribution for z, t in zip(pretax_incomes, taxes)]
    return posttax, taxes, redistribution


def plan_demand(household: HouseholdState, price: float) -> float:
    """Intended goods demand: the consumption propensity applied to current
    wealth (post-tax income already credited), divided by the price."""
    if price <= 0:
        raise ValueError("price must be > 0")
    return household.consumption_propensity * household.savings / price


def execute_consumption(
    households: Sequence[HouseholdState],
    market: MarketState,
    rng: np.random.Generator,
) -> tuple[list[float], float]:
    """Let households buy goods in a random order until inventory runs out.

    Intentions are fixed from start-of-round wealth; each purchase is capped
    by the remaining inventory (and spending by the buyer's savings, which
    only binds at float rounding). Inventory and savings are updated in
    place.

    Returns (amount spent by household id, total intended demand).
    """
    demands = [plan_demand(hh, market.price) for hh in households]
    total_demand = float(sum(demands))
    spent = [0.0] * len(households)
    for idx in rng.permutation(len(households)):
        hh = households[idx]
        filled = min(demands[idx], market.inventory)
        cost = min(filled * market.price, hh.savings)
        hh.consumption_spent = float(cost)
        hh.savings = float(max(hh.savings - cost, 0.0))
        market.inventory = float(max(market.inventory - filled, 0.0))
        spent[idx] = float(cost)
    market.last_demand = total_demand
    return spent, total_demand


def compute_mismatch(demand: float, inventory: float) -> float:
    """Demand-supply mismatch in [-1, 1]: (D - G) / max(D, G).

    An empty market (D = G = 0) exerts no pressure and returns 0.
    """
    if demand < 0 or inventory < 0:
        raise ValueError("demand and inventory must be >= 0")
    if demand == 0.0 and inventory == 0.0:
        return 0.0
    return float((demand - inventory) / max(demand, inventory))


def adjust_wages_and_price(
    households: Sequence[HouseholdState],
    market: MarketState,
    mismatch: float,
    params: AdjustmentParams,
    rng: np.random.Generator,
) -> None:
    """Nudge every wage and the price toward the mismatch sign.

    Each multiplier is 1 + sign(mismatch) * U(0, cap * |mismatch|), drawn
    independently per wage and once for the price; wages draw first, in
    household order. Zero mismatch leaves everything unchanged (the draws
    still occur, keeping the rng stream layout fixed).
    """
    mismatch = float(mismatch)
    direction = 1 if mismatch > 0 else -1 if mismatch < 0 else 0
    magnitude = abs(mismatch)
    wage_steps = rng.uniform(0.0, params.max_wage_step * magnitude, len(households))
    for hh, step in zip(households, wage_steps):
        hh.hourly_wage = float(hh.hourly_wage * (1.0 + direction * step))
    price_step = rng.uniform(0.0, params.max_price_step * magnitude)
    market.price = float(market.price * (1.0 + direction * price_step))
    market.mismatch = mismatch


def accrue_interest(households: Sequence[HouseholdState], rate: float) -> None:
    """Grow every savings balance by the annual interest rate."""
    if rate < 0:
        raise ValueError("rate must be >= 0")
    for hh in households:
        hh.savings *= 1.0 + rate


def update_interest_rate(
    params: AdjustmentParams, inflation: float, unemployment: float
) -> float:
    """Taylor-rule interest rate, floored at zero.

    Rises with inflation above target and falls as unemployment exceeds its
    natural level.
    """
    rate = (
        params.natural_rate
        + params.target_inflation
        + params.inflation_response * (inflation - params.target_inflation)
        + params.unemployment_response * (params.natural_unemployment - unemployment)
    )
    return max(rate, 0.0)
