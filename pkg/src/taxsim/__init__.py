"""taxsim: a deterministic agent-based income-tax simulator.

Households earn, pay bracketed taxes, consume, and save; a pluggable
government policy (free market, fixed federal rates, elasticity-based
optimal rates, or an LLM planner) periodically resets the bracket rates.
The social outcome is equality times per-capita wealth.
"""

from taxsim.config import GatewayConfig, InitialConditions, SimConfig, load_config
from taxsim.economy import (
    AdjustmentParams,
    HouseholdState,
    MarketState,
    Persona,
    TaxSchedule,
    apply_taxation,
    compute_tax,
)
from taxsim.gateway import ChatGateway, ChatRequest
from taxsim.households import Decision, DecisionContext, LLMBackend, RuleBasedBackend
from taxsim.metrics import equality, gini, productivity, social_outcome
from taxsim.policies import (
    DEFAULT_BRACKETS,
    US_FEDERAL_RATES,
    FreeMarketPolicy,
    PolicyObservation,
    SaezOptimalPolicy,
    SaezParams,
    TaxAgentConfig,
    TaxAgentPolicy,
    USFederalPolicy,
    saez_schedule,
)
from taxsim.simulation import SimulationResult, compare, run, sweep

__version__ = "0.1.0"

__all__ = [
    "AdjustmentParams",
    "ChatGateway",
    "ChatRequest",
    "DEFAULT_BRACKETS",
    "Decision",
    "DecisionContext",
    "FreeMarketPolicy",
    "GatewayConfig",
    "HouseholdState",
    "InitialConditions",
    "LLMBackend",
    "MarketState",
    "Persona",
    "PolicyObservation",
    "RuleBasedBackend",
    "SaezOptimalPolicy",
    "SaezParams",
    "SimConfig",
    "SimulationResult",
    "TaxAgentConfig",
    "TaxAgentPolicy",
    "TaxSchedule",
    "USFederalPolicy",
    "US_FEDERAL_RATES",
    "apply_taxation",
    "compare",
    "compute_tax",
    "equality",
    "gini",
    "load_config",
    "productivity",
    "run",
    "saez_schedule",
    "social_outcome",
    "sweep",
]
