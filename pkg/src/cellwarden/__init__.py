"""cellwarden: proactive power control for a simulated urban 5G cell.

A deterministic minute-resolution cell simulator, a from-scratch LSTM load
forecaster, mock external-intelligence feeds with robust cross-validation,
and a tiered control agent benchmarked against fixed and reactive baselines.
"""

__version__ = "0.1.0"

from .agent import (PERSONAS, Action, Persona, PolicyThresholds,
                    RewardBreakdown, Tier, classify_tier, control_loop,
                    decide, reward)
from .baselines import fixed_policy, reactive_policy, run_fixed, run_reactive
from .feeds import (FeedPanel, FeedService, NoiseProfile, SignalKind,
                    SourceReport, ValidatedSignal, generate_feed, validate,
                    validate_series)
from .kpi import KpiReport, action_rate_pct, aggregate, cov, outage_rate_pct
from .scenario import (Scenario, ScenarioError, build_suite,
                       default_training_scenario, load_scenario,
                       parse_scenario)
from .simcore import CellWorld, EventRecord, RunLog, SimConfig, TrafficModel

__all__ = [
    "PERSONAS", "Action", "CellWorld", "EventRecord", "FeedPanel",
    "FeedService", "KpiReport", "NoiseProfile", "Persona",
    "PolicyThresholds", "RewardBreakdown", "RunLog", "Scenario",
    "ScenarioError", "SignalKind", "SimConfig", "SourceReport", "Tier",
    "TrafficModel", "ValidatedSignal", "action_rate_pct", "aggregate",
    "build_suite", "classify_tier", "control_loop", "cov", "decide",
    "default_training_scenario", "fixed_policy", "generate_feed",
    "load_scenario", "outage_rate_pct", "parse_scenario", "reactive_policy",
    "reward", "run_fixed", "run_reactive", "validate", "validate_series",
    "__version__",
]
