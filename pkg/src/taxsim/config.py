"""Run configuration: one dataclass tree mirroring the JSON config file
field-for-field, with validation and (de)serialization."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from taxsim.economy import AdjustmentParams
from taxsim.households import HouseholdLLMConfig
from taxsim.policies import SaezParams, TaxAgentConfig

TAX_SYSTEMS = ("free", "us_federal", "saez", "tax_agent")
HOUSEHOLD_BACKENDS = ("llm", "rule_based")
PRODUCTIVITY_METRICS = ("per_capita", "total")


class ConfigError(ValueError):
    """The configuration is unusable as given."""


@dataclass
class GatewayConfig:
    """How LLM calls are satisfied; "scripted" is injection-only and cannot
    be configured from a file."""

    mode: str = "replay"
    endpoint: str = ""
    cache_path: str = ""
    api_key_env: str = "TAXSIM_API_KEY"
    timeout_seconds: float = 30.0


@dataclass
class InitialConditions:
    """Month-0 state: log-normal wage/savings draws plus market scalars."""

    wage_median: float = 25.0
    wage_sigma: float = 0.8
    savings_median: float = 50_000.0
    savings_sigma: float = 0.6
    price: float = 126.78
    interest_rate: float = 0.03
    inventory: float = 0.0


@dataclass
class SimConfig:
    n_households: int = 50
    months: int = 120
    productivity: float = 1.0
    seed: int = 0
    tax_system: str = "us_federal"
    household_backend: str = "rule_based"
    adjust_period_months: int = 3
    reflection_period_months: int = 3
    productivity_metric: str = "per_capita"
    adjustment: AdjustmentParams = field(default_factory=AdjustmentParams)
    saez: SaezParams = field(default_factory=SaezParams)
    tax_agent: TaxAgentConfig = field(default_factory=TaxAgentConfig)
    household_llm: HouseholdLLMConfig = field(default_factory=HouseholdLLMConfig)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    initial: InitialConditions = field(default_factory=InitialConditions)
    persona_path: str = ""
    output_dir: str = "out"
    write_households: bool = True

    def validate(self) -> None:
        problems = []
        if self.n_households < 1:
            problems.append("n_households must be >= 1")
        if self.months < 1:
            problems.append("months must be >= 1")
        if self.productivity <= 0:
            problems.append("productivity must be > 0")
        if self.adjust_period_months < 1:
            problems.append("adjust_period_months must be >= 1")
        if self.reflection_period_months < 1:
            problems.append("reflection_period_months must be >= 1")
        if self.tax_system not in TAX_SYSTEMS:
            problems.append(f"tax_system must be one of {TAX_SYSTEMS}")
        if self.household_backend not in HOUSEHOLD_BACKENDS:
            problems.append(f"household_backend must be one of {HOUSEHOLD_BACKENDS}")
        if self.productivity_metric not in PRODUCTIVITY_METRICS:
            problems.append(f"productivity_metric must be one of {PRODUCTIVITY_METRICS}")
        if self.initial.price <= 0:
            problems.append("initial.price must be > 0")
        if self.initial.interest_rate < 0:
            problems.append("initial.interest_rate must be >= 0")
        if problems:
            raise ConfigError("; ".join(problems))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _build_dataclass(cls, data: dict[str, Any], where: str):
    known = {f.name: f for f in fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {where}{key!r}")
        # Nested sections are dicts in the file; everything else passes through.
        if isinstance(value, dict):
            nested = _NESTED_TYPES.get(key)
            if nested is None:
                raise ConfigError(f"config key {where}{key!r} does not take a mapping")
            value = _build_dataclass(nested, value, where=f"{where}{key}.")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config section {where or 'root.'}: {exc}") from exc


_NESTED_TYPES = {
    "adjustment": AdjustmentParams,
    "saez": SaezParams,
    "tax_agent": TaxAgentConfig,
    "household_llm": HouseholdLLMConfig,
    "gateway": GatewayConfig,
    "initial": InitialConditions,
}


def config_from_dict(data: dict[str, Any]) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return _build_dataclass(SimConfig, data, where="")


def load_config(path: str | Path) -> SimConfig:
    """Read a JSON config whose keys mirror SimConfig field names."""
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"config file not found: {file_path}")
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {file_path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: SimConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
