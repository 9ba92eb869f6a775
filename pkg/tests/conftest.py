from __future__ import annotations

from pathlib import Path

import pytest

from taxsim.economy import TaxSchedule
from taxsim.policies import DEFAULT_BRACKETS, US_FEDERAL_RATES

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def federal_schedule() -> TaxSchedule:
    return TaxSchedule(DEFAULT_BRACKETS, US_FEDERAL_RATES)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
