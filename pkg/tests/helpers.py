"""Shared test utilities: independent oracles for the tax, gini, and
optimal-rate computations, plus deterministic offline LLM stand-ins."""

from __future__ import annotations

import hashlib
import json

import numpy as np

from taxsim.economy import TaxSchedule
from taxsim.gateway import ChatGateway, ChatRequest


def tax_by_cent_integration(
    thresholds: tuple[float, ...], rates: tuple[float, ...], income: float
) -> float:
    """Integrate marginal rates cent by cent over [0, income).

    Exact whenever the thresholds and the income sit on whole cents, since
    the marginal rate is then constant inside every cent interval.
    """
    n_cents = int(round(income * 100))
    if n_cents <= 0:
        return 0.0
    midpoints = (np.arange(n_cents) + 0.5) / 100.0
    bracket_of = np.searchsorted(np.asarray(thresholds), midpoints, side="right") - 1
    return float(np.asarray(rates)[bracket_of].sum() * 0.01)


def random_cent_schedule(rng: np.random.Generator, max_threshold: float = 1000.0):
    """Random valid schedule with 2..8 brackets, thresholds on whole cents
    spread log-uniformly up to ``max_threshold`` dollars."""
    n_brackets = int(rng.integers(2, 9))
    raw = 10.0 ** rng.uniform(0.0, np.log10(max_threshold * 100.0), n_brackets - 1)
    cents = sorted(set(int(c) for c in raw if int(c) >= 1))
    thresholds = (0.0, *(c / 100.0 for c in cents))
    rates = tuple(float(r) for r in rng.uniform(0.0, 1.0, len(thresholds)))
    return TaxSchedule(thresholds, rates)


def random_cent_income(rng: np.random.Generator, max_income: float = 1000.0) -> float:
    """Log-uniform income on the cent grid, occasionally exactly zero."""
    if rng.random() < 0.02:
        return 0.0
    return round(float(10.0 ** rng.uniform(-1.0, np.log10(max_income))), 2)


def pairwise_gini(values) -> float:
    """Brute-force gini: mean absolute pairwise difference over 2 * N^2 * mean."""
    arr = np.asarray(values, dtype=float)
    total = arr.sum()
    if total == 0:
        return 0.0
    diffs = np.abs(arr[:, None] - arr[None, :]).sum()
    return float(diffs / (2 * arr.size ** 2 * (total / arr.size)))


def oracle_saez_rates(incomes, brackets, elasticity, previous_top=None):
    """Independent optimal-rate assembly with pure-Python counting for the
    empirical CDF and the bracket-histogram density."""
    positive = sorted(z for z in incomes if z > 0)
    m = len(positive)
    assert m >= 2, "oracle needs two positive incomes"
    e = 0.0 if positive[0] == positive[-1] else elasticity

    def cdf(z):
        return sum(1 for x in positive if x <= z) / m

    rates = []
    for k in range(len(brackets) - 1):
        lo, hi = brackets[k], brackets[k + 1]
        share = sum(1 for x in positive if lo <= x < hi) / m
        density = share / (hi - lo)
        mid = (lo + hi) / 2.0
        raw = ((1.0 - cdf(mid)) + e * mid * density) / (1.0 + e * density)
        rates.append(min(max(raw, 0.0), 1.0))
    tail = [x for x in positive if x > brackets[-1]]
    if tail:
        tail_mean = sum(tail) / len(tail)
        pareto = tail_mean / (tail_mean - brackets[-1])
        rates.append(1.0 / (1.0 + pareto * e))
    else:
        assert previous_top is not None, "tail empty and no previous top rate"
        rates.append(previous_top)
    return rates


def deterministic_reply(request: ChatRequest) -> str:
    """Offline transport: a reply derived from the prompt hash, valid for
    whichever template produced the prompt."""
    digest = hashlib.sha256(request.prompt.encode("utf-8")).digest()
    if request.prompt.startswith("You are a tax planner"):
        rates = [round(((digest[i] % 46) + 5) / 100.0, 2) for i in range(7)]
        return str(rates)
    if request.prompt.startswith("You are reviewing your household finances"):
        return "Keep working steadily and trim spending when prices climb."
    work = round(((digest[0] % 41) + 30) / 100.0, 2)
    consumption = round(((digest[1] % 41) + 20) / 100.0, 2)
    return json.dumps({"work": work, "consumption": consumption})


def scripted_gateway(replies) -> ChatGateway:
    return ChatGateway("scripted", scripted_replies=list(replies))


def panicking_transport(request: ChatRequest) -> str:
    raise AssertionError("transport must not be touched in this mode")
