"""Government-side tax policies.

Four interchangeable implementations of one interface: propose a full
bracketed schedule from an observation of the economy. The bracket
thresholds are fixed for a whole run; policies only move the rates.

  FreeMarketPolicy  - zero rates everywhere.
  USFederalPolicy   - the fixed seven federal marginal rates.
  SaezOptimalPolicy - elasticity-based optimal rates re-estimated from the
                      current income distribution each period.
  TaxAgentPolicy    - an LLM planner prompted with incomes, wealth, and the
                      metric history; replies are parsed and validated, and
                      any failure keeps the previous schedule in force.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from taxsim.economy import TaxSchedule, quantize_fraction
from taxsim.gateway import ChatGateway, ChatRequest, TransportError

# Monthly income bracket thresholds shared by every policy, and the federal
# marginal rates used both as a baseline system and as the bootstrap schedule.
DEFAULT_BRACKETS = (0.0, 808.33, 3289.58, 7016.67, 13393.75, 17008.33, 42525.0)
US_FEDERAL_RATES = (0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37)


class EmptyTailError(ValueError):
    """No incomes above the tail threshold; the Pareto tail is undefined."""


class DegenerateIncomesError(ValueError):
    """Too few positive incomes to estimate a distribution."""


class TaxReplyParseError(ValueError):
    """The planner reply contained no well-formed list of seven rates."""


def free_market_schedule(brackets: Sequence[float] = DEFAULT_BRACKETS) -> TaxSchedule:
    return TaxSchedule(tuple(brackets), (0.0,) * len(brackets))


def us_federal_schedule(brackets: Sequence[float] = DEFAULT_BRACKETS) -> TaxSchedule:
    return TaxSchedule(tuple(brackets), US_FEDERAL_RATES)


@dataclass(frozen=True)
class PolicyObservation:
    """What a policy sees when asked for new rates: last month's pre-tax
    incomes (zeros for non-workers), current wealth, and the full per-month
    schedule/productivity/equality histories, aligned by month."""

    month: int
    incomes: tuple[float, ...]
    wealth: tuple[float, ...]
    schedule_history: tuple[TaxSchedule, ...]
    productivity_history: tuple[float, ...]
    equality_history: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "incomes", tuple(self.incomes))
        object.__setattr__(self, "wealth", tuple(self.wealth))
        object.__setattr__(self, "schedule_history", tuple(self.schedule_history))
        object.__setattr__(
            self, "productivity_history", tuple(self.productivity_history)
        )
        object.__setattr__(self, "equality_history", tuple(self.equality_history))
        if len(self.incomes) != len(self.wealth):
            raise ValueError("incomes and wealth must have equal length")

    def previous_schedule(self) -> TaxSchedule:
        if not self.schedule_history:
            return us_federal_schedule()
        return self.schedule_history[-1]


@dataclass(frozen=True)
class SaezParams:
    """Inputs to the optimal-rate formulas. ``elasticity`` doubles as the
    top-bracket uncompensated elasticity. ``tail_threshold`` of None means
    the schedule's own top threshold; ``density_bandwidth`` is reserved for
    a kernel density variant (the default estimator is a bracket
    histogram)."""

    elasticity: float = 0.25
    density_bandwidth: float = 1000.0
    tail_threshold: float | None = None

    def __post_init__(self) -> None:
        if self.elasticity < 0:
            raise ValueError("elasticity must be >= 0")
        if self.density_bandwidth <= 0:
            raise ValueError("density_bandwidth must be > 0")
        if self.tail_threshold is not None and self.tail_threshold <= 0:
            raise ValueError("tail_threshold must be > 0")


@dataclass(frozen=True)
class TaxAgentConfig:
    """LLM planner settings; the model id stands in for whatever policy
    knowledge the model carries."""

    model_id: str = "qwen-turbo-2024-09-19"
    temperature: float = 0.2
    max_retries: int = 3
    max_tokens: int = 256

    def __post_init__(self) -> None:
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


def pareto_parameter(incomes: Sequence[float], tail_threshold: float) -> float:
    """Tail-thickness statistic a = mean_tail / (mean_tail - z*) over incomes
    strictly above the threshold z*. Raises EmptyTailError when nothing lies
    above it."""
    tail = [z for z in incomes if z > tail_threshold]
    if not tail:
        raise EmptyTailError(f"no incomes above {tail_threshold}")
    tail_mean = sum(tail) / len(tail)
    if tail_mean <= tail_threshold:
        raise EmptyTailError("tail mean does not exceed the threshold")
    return tail_mean / (tail_mean - tail_threshold)


def top_rate(pareto_param: float, elasticity: float) -> float:
    """Revenue-maximizing top marginal rate 1 / (1 + a * e), in (0, 1]."""
    if pareto_param <= 0:
        raise ValueError("pareto parameter must be > 0")
    if elasticity < 0:
        raise ValueError("elasticity must be >= 0")
    return 1.0 / (1.0 + pareto_param * elasticity)


def marginal_rate(
    cdf_value: float, density_value: float, elasticity: float, income: float
) -> float:
    """Optimal marginal rate ((1 - G) + e*z*g) / (1 + e*g) at income z, given
    the income CDF value G and density g there, clamped into [0, 1]."""
    if not 0.0 <= cdf_value <= 1.0:
        raise ValueError("cdf_value must lie in [0, 1]")
    if density_value < 0:
        raise ValueError("density_value must be >= 0")
    if income < 0:
        raise ValueError("income must be >= 0")
    raw = ((1.0 - cdf_value) + elasticity * income * density_value) / (
        1.0 + elasticity * density_value
    )
    return min(max(raw, 0.0), 1.0)


def saez_schedule(
    incomes: Sequence[float],
    brackets: Sequence[float],
    params: SaezParams,
    previous: TaxSchedule | None = None,
) -> TaxSchedule:
    """Assemble a full schedule from the current positive incomes.

    Each finite bracket's rate is the optimal marginal rate at the bracket
    midpoint, using the empirical CDF and a bracket-histogram density. The
    top bracket uses the Pareto-tail formula at the top threshold; when the
    tail is empty the previous schedule's top rate carries over. A
    degenerate distribution (all positive incomes equal) falls back to the
    zero-elasticity reduction 1 - G(z).
    """
    brackets = tuple(float(b) for b in brackets)
    positive = np.sort(np.asarray([z for z in incomes if z > 0], dtype=float))
    if positive.size < 2:
        raise DegenerateIncomesError("need at least two positive incomes")
    count = positive.size
    elasticity = params.elasticity
    if positive[0] == positive[-1]:
        elasticity = 0.0  # point mass: density is meaningless

    # Share of incomes in each half-open bracket [b_k, b_k+1); the top
    # bracket takes the remainder. Densities are share / width.
    edge_index = np.searchsorted(positive, brackets, side="left")
    rates: list[float] = []
    for k in range(len(brackets) - 1):
        width = brackets[k + 1] - brackets[k]
        share = (edge_index[k + 1] - edge_index[k]) / count
        midpoint = (brackets[k] + brackets[k + 1]) / 2.0
        cdf_mid = np.searchsorted(positive, midpoint, side="right") / count
        rates.append(marginal_rate(cdf_mid, share / width, elasticity, midpoint))

    tail_threshold = (
        params.tail_threshold if params.tail_threshold is not None else brackets[-1]
    )
    try:
        rates.append(top_rate(pareto_parameter(positive, tail_threshold), elasticity))
    except EmptyTailError:
        if previous is None:
            raise
        rates.append(previous.rates[-1])
    return TaxSchedule(brackets, tuple(rates))


def build_tax_prompt(
    observation: PolicyObservation, brackets: Sequence[float] = DEFAULT_BRACKETS
) -> str:
    """Render the planner prompt: fixed brackets, last month's incomes and
    current wealth, the past schedules, and the metric histories, ending
    with the JSON list-of-seven instruction."""
    bracket_text = "[" + ", ".join(f"{b:.2f}" for b in brackets) + "]"
    income_text = "[" + ", ".join(str(round(z, 2)) for z in observation.incomes) + "]"
    wealth_text = "[" + ", ".join(str(round(w, 2)) for w in observation.wealth) + "]"
    schedule_text = "[(" + str(
        [[round(r, 2) for r in s.rates] for s in observation.schedule_history]
    ) + ")]"
    productivity_text = (
        "[" + ", ".join(f" ({round(v, 2)})" for v in observation.productivity_history) + "]"
    )
    equality_text = (
        "[" + ", ".join(f" ({round(v, 2)})" for v in observation.equality_history) + "]"
    )
    return (
        "You are a tax planner in charge of adjusting the tax rates of each "
        "income brackets. You will decide the tax rate in next period applied "
        f"cumulatively to the income of agents in the seven {bracket_text} "
        "income brackets. Last month, the incomes and wealth of individuals "
        f"living in your society were ${income_text} and ${wealth_text}. "
        f"The tax rates you set in the past months were {schedule_text}. "
        "The average per-capita productivity in the last months were "
        f"{productivity_text}: the past months' equality performances were "
        f"{equality_text}(the higher, the more equal). Adjust the tax rates "
        "to build a society that you consider best for society. You have the "
        "total freedom to adjust the rates! Provide your decision in a JSON "
        "format. The decision should be a list with seven values (each value "
        "between 0 and 1 with intervals of 0.01). Please only provide me a "
        "list with seven values between 0 and 1! Do not provide anything "
        "else! Keep the thinking process to yourself."
    )


_BRACKETED_GROUP = re.compile(r"\[([^\[\]]*)\]")


def parse_tax_reply(text: str) -> tuple[float, ...]:
    """Extract the first bracketed list of exactly seven numbers from a
    reply, clamp each into [0, 1], and snap to the 0.01 grid. Surrounding
    chatter is ignored; anything else raises TaxReplyParseError."""
    for match in _BRACKETED_GROUP.finditer(text):
        parts = [p.strip() for p in match.group(1).split(",")]
        if len(parts) != 7:
            continue
        try:
            values = [float(p) for p in parts]
        except ValueError:
            continue
        try:
            return tuple(quantize_fraction(v, "0.01") for v in values)
        except ValueError:
            continue  # non-finite entries
    raise TaxReplyParseError("reply contains no list of seven rates")


class TaxPolicy:
    """Interface: map an observation to a full, valid TaxSchedule over the
    policy's fixed brackets."""

    brackets: tuple[float, ...] = DEFAULT_BRACKETS

    def propose(self, observation: PolicyObservation) -> TaxSchedule:
        raise NotImplementedError


class FreeMarketPolicy(TaxPolicy):
    """No taxation, no redistribution: every rate is zero."""

    def __init__(self, brackets: Sequence[float] = DEFAULT_BRACKETS) -> None:
        self.brackets = tuple(brackets)
        self._schedule = free_market_schedule(self.brackets)

    def propose(self, observation: PolicyObservation) -> TaxSchedule:
        return self._schedule


class USFederalPolicy(TaxPolicy):
    """The fixed federal marginal rates, never adjusted."""

    def __init__(self, brackets: Sequence[float] = DEFAULT_BRACKETS) -> None:
        self.brackets = tuple(brackets)
        self._schedule = us_federal_schedule(self.brackets)

    def propose(self, observation: PolicyObservation) -> TaxSchedule:
        return self._schedule


class SaezOptimalPolicy(TaxPolicy):
    """Re-derives optimal rates from the observed income distribution; any
    estimation failure keeps the previous schedule."""

    def __init__(
        self,
        params: SaezParams | None = None,
        brackets: Sequence[float] = DEFAULT_BRACKETS,
    ) -> None:
        self.params = params or SaezParams()
        self.brackets = tuple(brackets)

    def propose(self, observation: PolicyObservation) -> TaxSchedule:
        previous = observation.previous_schedule()
        try:
            return saez_schedule(
                observation.incomes, self.brackets, self.params, previous=previous
            )
        except (DegenerateIncomesError, EmptyTailError):
            return previous


class TaxAgentPolicy(TaxPolicy):
    """LLM-backed planner. Retries up to ``max_retries`` total attempts on
    parse or transport failures, then keeps the previous schedule; a replay
    cache miss is fatal and propagates."""

    def __init__(
        self,
        gateway: ChatGateway,
        config: TaxAgentConfig | None = None,
        brackets: Sequence[float] = DEFAULT_BRACKETS,
    ) -> None:
        self.gateway = gateway
        self.config = config or TaxAgentConfig()
        self.brackets = tuple(brackets)

    def propose(self, observation: PolicyObservation) -> TaxSchedule:
        request = ChatRequest(
            model_id=self.config.model_id,
            prompt=build_tax_prompt(observation, self.brackets),
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
        )
        for _ in range(self.config.max_retries):
            try:
                rates = parse_tax_reply(self.gateway.complete(request))
            except (TaxReplyParseError, TransportError):
                continue
            return TaxSchedule(self.brackets, rates)
        return observation.previous_schedule()
