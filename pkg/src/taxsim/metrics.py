"""Evaluation metrics: Gini index, the equality score derived from it,
per-capita productivity, their product as the social outcome, and the annual
inflation/unemployment series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class MetricSnapshot:
    """One month's metric row; inflation/unemployment are filled only on
    year boundaries."""

    month: int
    gini: float
    equality: float
    productivity: float
    social_outcome: float
    inflation: float | None = None
    unemployment: float | None = None


def gini(values: Sequence[float]) -> float:
    """Gini index of a nonnegative vector: the mean absolute pairwise
    difference normalized by twice the mean, in [0, (N-1)/N].

    Computed by the sorted-rank identity; an all-zero vector is 0 by
    convention.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("gini of an empty vector is undefined")
    if np.any(arr < 0):
        raise ValueError("gini requires nonnegative values")
    total = float(arr.sum())
    if total == 0.0:
        return 0.0
    ordered = np.sort(arr)
    n = arr.size
    ranks = np.arange(1, n + 1)
    return float(((2 * ranks - n - 1) * ordered).sum() / (n * total))


def equality(values: Sequence[float]) -> float:
    """Equality score (1 - gini) * (N-1)/N; 0 is worst, (N-1)/N is perfect."""
    n = len(values)
    return (1.0 - gini(values)) * (n - 1) / n


def productivity(values: Sequence[float], per_capita: bool = True) -> float:
    """Aggregate wealth, per capita by default (``per_capita=False`` gives
    the plain sum)."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("productivity of an empty vector is undefined")
    total = float(arr.sum())
    return total / arr.size if per_capita else total


def social_outcome(equality_score: float, productivity_score: float) -> float:
    """The scalar objective: equality times productivity."""
    return equality_score * productivity_score


def annual_inflation(monthly_prices: Sequence[float]) -> float:
    """Year-over-year change of the mean monthly price across the last two
    complete years; 0.0 while fewer than two years exist."""
    prices = np.asarray(monthly_prices, dtype=float)
    full_years = prices.size // 12
    if full_years < 2:
        return 0.0
    current = prices[12 * (full_years - 1) : 12 * full_years].mean()
    previous = prices[12 * (full_years - 2) : 12 * (full_years - 1)].mean()
    return float((current - previous) / previous)


def annual_unemployment(labor_history: Sequence[Sequence[int]]) -> float:
    """Fraction of household-months not worked over exactly twelve months.

    ``labor_history`` is a 12 x N matrix of 0/1 employment indicators.
    """
    arr = np.asarray(labor_history, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != 12 or arr.shape[1] < 1:
        raise ValueError("labor history must be a 12 x N matrix")
    return float(1.0 - arr.mean())
