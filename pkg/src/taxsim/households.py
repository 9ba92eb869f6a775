"""Household decision backends.

Each month a household picks a work propensity and a consumption propensity,
both on a 0.02 grid. The LLM backend renders a persona-grounded prompt over
the household's economic situation and parses a two-key JSON reply; the
rule-based backend is a deterministic offline stand-in with the same
interface. Quarterly, households distill their memory of past months into a
free-text reflection note that is appended to later prompts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from taxsim.economy import Persona, TaxSchedule, compute_tax, quantize_fraction
from taxsim.gateway import ChatGateway, ChatRequest, TransportError

INCREASED = "increased"
DECREASED = "decreased"
UNCHANGED = "unchanged"

_INCOME_PHRASES = {
    INCREASED: "increased compared to last month due to inflation of the labor market",
    DECREASED: "decreased compared to last month due to deflation of the labor market",
    UNCHANGED: "is unchanged compared to last month",
}
_PRICE_PHRASES = {
    INCREASED: "Inflation has led to a price increase in the consumption market",
    DECREASED: "Deflation has led to a price decrease in the consumption market",
    UNCHANGED: "The price level in the consumption market is unchanged",
}


class DecisionError(ValueError):
    """The backend could not produce a usable decision."""


@dataclass(frozen=True)
class Decision:
    """A (work, consumption) propensity pair on the 0.02 grid."""

    work_propensity: float
    consumption_propensity: float

    @classmethod
    def snapped(cls, work: float, consumption: float) -> "Decision":
        return cls(quantize_fraction(work), quantize_fraction(consumption))


DEFAULT_DECISION = Decision(0.6, 0.4)  # month-0 fallback before any history


@dataclass(frozen=True)
class DecisionContext:
    """Everything one household observes when deciding for a month."""

    date: str  # "YYYY.MM"
    persona: Persona
    expected_income: float
    previous_schedule: TaxSchedule
    current_schedule: TaxSchedule
    average_price: float
    savings: float
    interest_rate: float
    income_direction: str = UNCHANGED
    price_direction: str = UNCHANGED
    last_consumption: float = 0.0
    reflection_note: str = ""

    def __post_init__(self) -> None:
        if self.expected_income < 0 or self.savings < 0 or self.last_consumption < 0:
            raise ValueError("currency fields must be >= 0")
        if self.average_price <= 0:
            raise ValueError("average_price must be > 0")
        if self.income_direction not in _INCOME_PHRASES:
            raise ValueError(f"unknown income_direction {self.income_direction!r}")
        if self.price_direction not in _PRICE_PHRASES:
            raise ValueError(f"unknown price_direction {self.price_direction!r}")


@dataclass(frozen=True)
class MemoryEntry:
    """One month's summary kept for the quarterly self-review."""

    date: str
    work_propensity: float
    consumption_propensity: float
    pretax_income: float
    posttax_income: float
    consumption: float


@dataclass
class MemoryPool:
    """Bounded chronological record of a household's months."""

    capacity: int = 12
    entries: list[MemoryEntry] = field(default_factory=list)

    def add(self, entry: MemoryEntry) -> None:
        self.entries.append(entry)
        if len(self.entries) > self.capacity:
            del self.entries[: len(self.entries) - self.capacity]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)


class HouseholdBackend(Protocol):
    def decide(self, context: DecisionContext) -> Decision: ...

    def reflect(self, memory: MemoryPool) -> str: ...


def build_household_prompt(context: DecisionContext) -> str:
    """Render the monthly decision prompt, field for field: persona, date,
    expected income and its direction, last consumption, old and new tax
    schedules, price, savings, interest rate, and the two-key JSON
    instruction on the 0.02 grid. A non-empty reflection note is appended."""
    persona = context.persona
    brackets = (
        "[" + ", ".join(f"{b:.2f}" for b in context.current_schedule.thresholds) + "]"
    )
    old_rates = (
        "[" + ", ".join(f"{r:.2f}" for r in context.previous_schedule.rates) + "]"
    )
    new_rates = (
        "[" + ", ".join(f"{r * 100:.2f}%" for r in context.current_schedule.rates) + "]"
    )
    prompt = (
        f"You're {persona.name}, a {persona.age}-year-old individual living in "
        f"{persona.city}. A tax planner adjusts your tax rates periodically. "
        f"Now it's {context.date}. Last month, you worked as a(an) "
        f"{persona.occupation}. If you continue working this month, your "
        f"expected income will be ${context.expected_income:.2f}, which "
        f"{_INCOME_PHRASES[context.income_direction]}. Besides, your "
        f"consumption was ${context.last_consumption:.2f}. Part of your income "
        "last month was witheld as income tax. Last month, the tax brackets "
        f"are: {brackets} and their corresponding rates are: {old_rates}. "
        "Income earned within each bracket is taxed only at that bracket's "
        "rate. This month, according to the tax planner, the brackets are not "
        f"changed. But the planner updated corresponding rates: {new_rates}. "
        "Income earned within each bracket is taxed at that bracket's rate. "
        "Pay attention to the tax rates because they may be different from "
        "the previous ones and you need to make your decision based on the "
        f"current rates {_PRICE_PHRASES[context.price_direction]}, with the "
        f"average price of essential goods now at ${context.average_price:.2f}. "
        f"Your current savings account balance is ${context.savings:.2f}. "
        f"Interest rates, as set by your bank, stand at "
        f"{context.interest_rate * 100:.2f}%. Considering aspects like your "
        "living costs, future aspirations, broader economic trends, and the "
        "tax you need to pay, how is your willingness to work this month? How "
        "would you plan your expenditures on essential goods? Provide your "
        "decisions in a JSON format. The format should have two keys: 'work' "
        "(a value between 0 and 1 with intervals of 0.02, indicating the "
        "willingness or propensity to work) and 'consumption' (a value "
        "between 0 and 1 with intervals of 0.02, indicating the proportion of "
        "all your savings and income you intend to spend on essential goods). "
        "Keep in mind, only provide your decisions in a JSON format with two "
        "keys and two values. Do not contain any other content in your "
        "response. Keep the thinking process to yourself. I only need two "
        "key-value pairs."
    )
    if context.reflection_note:
        prompt += (
            f" Your reflection on your earlier decisions: {context.reflection_note}"
        )
    return prompt


def build_reflection_prompt(memory: MemoryPool) -> str:
    """Render the quarterly self-review prompt from the memory entries."""
    lines = [
        f"{e.date}: work propensity {e.work_propensity:.2f}, consumption "
        f"propensity {e.consumption_propensity:.2f}, pre-tax income "
        f"${e.pretax_income:.2f}, post-tax income ${e.posttax_income:.2f}, "
        f"spent ${e.consumption:.2f}"
        for e in memory
    ]
    return (
        "You are reviewing your household finances. Here is your record of "
        "recent months:\n" + "\n".join(lines) + "\n"
        "Write a short note to yourself (two or three sentences) with lessons "
        "from these months to guide your upcoming work and spending "
        "decisions. Reply with the note only."
    )


_JSON_OBJECT = re.compile(r"\{[^{}]*\}", re.DOTALL)


def parse_decision_reply(text: str) -> Decision:
    """Parse a {"work": x, "consumption": y} reply into a grid-valid
    Decision; values are clamped and snapped, anything unparsable raises
    DecisionError."""
    candidates = []
    try:
        candidates.append(json.loads(text))
    except (json.JSONDecodeError, ValueError):
        candidates.extend(_JSON_OBJECT.findall(text))
    for candidate in candidates:
        payload = candidate
        if isinstance(payload, str):
            try:
                payload = json.loads(payload)
            except (json.JSONDecodeError, ValueError):
                continue
        if not isinstance(payload, dict):
            continue
        work = payload.get("work")
        consumption = payload.get("consumption")
        if isinstance(work, bool) or isinstance(consumption, bool):
            continue
        if not isinstance(work, (int, float)) or not isinstance(
            consumption, (int, float)
        ):
            continue
        try:
            return Decision.snapped(work, consumption)
        except ValueError:
            continue  # non-finite numbers
    raise DecisionError("reply contains no work/consumption object")


def rule_based_decide(context: DecisionContext) -> Decision:
    """Deterministic offline decision rule.

    Work appetite falls linearly with the average tax rate on the expected
    income (floor 0.2 at full confiscation); the consumption share targets
    roughly three units of the good out of reachable wealth, capped at 0.95.
    """
    expected = context.expected_income
    tax = compute_tax(context.current_schedule, expected)
    average_rate = tax / max(expected, 1.0)
    work = quantize_fraction(0.2 + 0.8 * (1.0 - average_rate))
    reachable = context.savings + expected * (1.0 - average_rate)
    consumption = quantize_fraction(
        min(0.95, 3.0 * context.average_price / max(reachable, context.average_price))
    )
    return Decision(work, consumption)


class RuleBasedBackend:
    """Offline backend: pure functions of the context, zero network use."""

    def decide(self, context: DecisionContext) -> Decision:
        return rule_based_decide(context)

    def reflect(self, memory: MemoryPool) -> str:
        return "baseline reflection"


@dataclass(frozen=True)
class HouseholdLLMConfig:
    model_id: str = "qwen-turbo-2024-09-19"
    temperature: float = 0.7
    max_retries: int = 3
    max_tokens: int = 128

    def __post_init__(self) -> None:
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


class LLMBackend:
    """LLM-driven decisions and reflections through a chat gateway.

    Parse and transport failures are retried up to ``max_retries`` total
    attempts and then surface as DecisionError/TransportError for the
    caller's fallback; a replay cache miss always propagates.
    """

    def __init__(
        self, gateway: ChatGateway, config: HouseholdLLMConfig | None = None
    ) -> None:
        self.gateway = gateway
        self.config = config or HouseholdLLMConfig()

    def _request(self, prompt: str) -> ChatRequest:
        return ChatRequest(
            model_id=self.config.model_id,
            prompt=prompt,
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
        )

    def decide(self, context: DecisionContext) -> Decision:
        request = self._request(build_household_prompt(context))
        for _ in range(self.config.max_retries):
            try:
                return parse_decision_reply(self.gateway.complete(request))
            except (DecisionError, TransportError):
                continue
        raise DecisionError("no parsable decision after retries")

    def reflect(self, memory: MemoryPool) -> str:
        request = self._request(build_reflection_prompt(memory))
        return self.gateway.complete(request).strip()


def decide(
    backend: HouseholdBackend,
    context: DecisionContext,
    fallback: Decision = DEFAULT_DECISION,
) -> Decision:
    """Total decision step: backend output is re-snapped onto the grid, and
    any decision/transport failure yields the fallback (the household's
    previous decision, or the documented month-0 default)."""
    try:
        raw = backend.decide(context)
    except (DecisionError, TransportError):
        raw = fallback
    return Decision.snapped(raw.work_propensity, raw.consumption_propensity)


def reflect(backend: HouseholdBackend, memory: MemoryPool, previous: str = "") -> str:
    """Total reflection step: empty memory yields an empty note, and any
    transport failure keeps the previous note."""
    if not memory:
        return ""
    try:
        return backend.reflect(memory)
    except TransportError:
        return previous
