"""The proactive tiered-control agent.

Each tick the agent blends the measured SINR with a projection of the worst
SINR implied by the load forecast and validated feeds, classifies the blend
into one of four bands, and emits a quantized power action with a templated
Thought/Action trace. The reward follows the shaped identity
total = 10*dSINR + R_threshold + R_action - 2*dPower.
"""

from __future__ import annotations

import datetime as dt
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .feeds import DEMAND_EVENT_FLOOR, SignalKind, ValidatedSignal
from .forecaster.forecast import ForecastEngine, ForecastResult
from .simcore.channel import (BUSINESS_HOURS_DB, CROWD_BASE_DB,
                              CROWD_DENSITY_SPAN_DB, LOAD_INTERFERENCE_SPAN_DB,
                              is_business_hours, power_sum_dbm)
from .simcore.config import NetworkState, SimConfig
from .simcore.world import CellWorld, LogRow, RunLog

SINR_IMPROVEMENT_WEIGHT = 10.0
POWER_PENALTY_WEIGHT = 2.0
R_THRESHOLD_MET = 5.0
R_THRESHOLD_MISS = -10.0
R_ACTION_GOOD = 2.0
R_ACTION_BAD = -2.0

MAX_STEP_DB = 3


class Tier(enum.Enum):
    CRITICAL = "critical"
    RISK = "risk"
    OPTIMIZATION = "optimization"
    EFFICIENCY = "efficiency"
    HOLD = "hold"


# legal integer power deltas per tier
TIER_LEGAL_DELTAS = {
    Tier.CRITICAL: (1, 2, 3),
    Tier.RISK: (1, 2, 3),
    Tier.OPTIMIZATION: (-2, -1, 0, 1, 2),
    Tier.EFFICIENCY: (-3, -2, -1),
    Tier.HOLD: (0,),
}


@dataclass(frozen=True)
class PolicyThresholds:
    gamma1_db: float = 15.0
    gamma2_db: float = 18.0
    gamma3_db: float = 20.0
    gamma4_db: float = 25.0

    def __post_init__(self):
        if not self.gamma1_db < self.gamma2_db < self.gamma3_db < self.gamma4_db:
            raise ValueError("thresholds must be strictly increasing")


@dataclass(frozen=True)
class ReactTrace:
    thought: str
    action_rationale: str
    inputs_digest: str


@dataclass(frozen=True)
class Action:
    power_delta_db: int
    emergency_prb_grant: bool
    tier: Tier
    trace: ReactTrace

    def __post_init__(self):
        if self.power_delta_db not in TIER_LEGAL_DELTAS[self.tier]:
            raise ValueError(
                f"delta {self.power_delta_db} illegal for tier {self.tier.value}")
        if self.emergency_prb_grant and self.tier is not Tier.CRITICAL:
            raise ValueError("only the critical tier may grant emergency PRBs")


@dataclass(frozen=True)
class RewardBreakdown:
    delta_sinr_db: float
    r_threshold: float
    r_action: float
    delta_power_db: float
    total: float

    def __post_init__(self):
        expected = (SINR_IMPROVEMENT_WEIGHT * self.delta_sinr_db
                    + self.r_threshold + self.r_action
                    - POWER_PENALTY_WEIGHT * self.delta_power_db)
        if self.total != expected:
            raise ValueError("total does not satisfy the reward identity")
        if self.delta_power_db < 0:
            raise ValueError("delta_power_db counts increases only")


@dataclass(frozen=True)
class Persona:
    name: str
    threshold_margin_db: float
    forecast_weight: float
    # multipliers on the (sinr, threshold, action, power) reward terms
    reward_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if not 0.0 <= self.forecast_weight <= 1.0:
            raise ValueError("forecast_weight must be in [0, 1]")
        if any((not math.isfinite(w)) or w < 0 for w in self.reward_weights):
            raise ValueError("reward weights must be finite and nonnegative")


PERSONAS = {
    "strategic": Persona("StrategicCoordinator", threshold_margin_db=2.0,
                         forecast_weight=0.8),
    "tactical": Persona("TacticalCoordinator", threshold_margin_db=0.0,
                        forecast_weight=0.4),
    "energy": Persona("EnergyBalancer", threshold_margin_db=-1.0,
                      forecast_weight=0.4,
                      reward_weights=(1.0, 1.0, 1.0, 2.0)),
}


def classify_tier(sinr_db: float, thresholds: PolicyThresholds) -> Tier:
    """Four half-open bands; a boundary value belongs to the upper band."""
    if not math.isfinite(sinr_db):
        raise ValueError(f"sinr must be finite: {sinr_db}")
    if sinr_db < thresholds.gamma1_db:
        return Tier.CRITICAL
    if sinr_db < thresholds.gamma2_db:
        return Tier.RISK
    if sinr_db < thresholds.gamma3_db:
        return Tier.OPTIMIZATION
    return Tier.EFFICIENCY


def project_interference_dbm(t: dt.datetime, load: float,
                             demand_multiplier: float, crowd_density: float,
                             cfg: SimConfig) -> float:
    """Deterministic part of the interference model, for look-ahead."""
    value = (cfg.interference_base_dbm
             + LOAD_INTERFERENCE_SPAN_DB * min(load * demand_multiplier, 1.0))
    if is_business_hours(t):
        value += BUSINESS_HOURS_DB
    if demand_multiplier > 1.0:
        value += CROWD_BASE_DB + CROWD_DENSITY_SPAN_DB * crowd_density
    return value


def _sane_demand(consensus: float) -> float:
    """Consensus noise around the quiet baseline must not fabricate events."""
    return consensus if consensus >= DEMAND_EVENT_FLOOR else 1.0


def _sane_crowd(consensus: float) -> float:
    return min(max(consensus, 0.0), 1.0)


def effective_stress_sinr(state: NetworkState,
                          forecast: ForecastResult | None,
                          feeds: Sequence[ValidatedSignal],
                          persona: Persona,
                          cfg: SimConfig) -> float:
    """Blend of measured SINR and the worst forecast-implied SINR.

    The projection re-evaluates the interference model at each forecast
    step's predicted load times the validated event demand, takes the worst
    aggregate, and shifts the current SINR by the aggregate change (the SINR
    law is affine in the denominator dB). Missing forecast degrades to the
    measurement.
    """
    current = state.sinr_db
    w = persona.forecast_weight
    if forecast is None or w == 0.0 or forecast.horizon_steps < 1:
        return current
    demand = {s.timestamp: _sane_demand(s.consensus_value) for s in feeds
              if s.signal_kind is SignalKind.EVENT_DEMAND}
    crowd = {s.timestamp: _sane_crowd(s.consensus_value) for s in feeds
             if s.signal_kind is SignalKind.CROWD_FLOW}

    denom_now = power_sum_dbm(
        project_interference_dbm(state.timestamp, state.load,
                                 demand.get(state.timestamp, 1.0),
                                 crowd.get(state.timestamp, 0.0), cfg),
        cfg.noise_floor_dbm)
    worst = -math.inf
    for k, t_k in enumerate(forecast.timestamps):
        interference = project_interference_dbm(
            t_k, float(forecast.predicted_load[k]),
            demand.get(t_k, 1.0), crowd.get(t_k, 0.0), cfg)
        worst = max(worst, power_sum_dbm(interference, cfg.noise_floor_dbm))
    projected = current + (denom_now - worst)
    return (1.0 - w) * current + w * projected


def _digest(state: NetworkState, forecast: ForecastResult | None,
            feeds: Sequence[ValidatedSignal], persona: Persona,
            thresholds: PolicyThresholds) -> str:
    payload = {
        "t": state.timestamp.isoformat(timespec="minutes"),
        "sinr": repr(state.sinr_db),
        "load": repr(state.load),
        "tx": repr(state.tx_power_dbm),
        "forecast": ([repr(float(v)) for v in forecast.predicted_load]
                     if forecast is not None else None),
        "feeds": [[s.signal_kind.value, s.timestamp.isoformat(timespec="minutes"),
                   repr(s.consensus_value)] for s in feeds],
        "persona": persona.name,
        "margin": repr(persona.threshold_margin_db),
        "gammas": [repr(thresholds.gamma1_db), repr(thresholds.gamma2_db),
                   repr(thresholds.gamma3_db), repr(thresholds.gamma4_db)],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def decide(state: NetworkState, forecast: ForecastResult | None,
           feeds: Sequence[ValidatedSignal], persona: Persona,
           thresholds: PolicyThresholds, cfg: SimConfig | None = None,
           mode: str = "proactive") -> Action:
    """Tier policy over the effective stress SINR.

    Critical boosts the maximum step and grants PRBs; Risk takes the
    smallest step that clears gamma2; Optimization nudges only when hugging
    the band floor, otherwise holds; Efficiency trims hard only when the
    result stays above gamma4.
    """
    if forecast is not None and cfg is None:
        raise ValueError("projection requires the sim config")
    eff = (effective_stress_sinr(state, forecast, feeds, persona, cfg)
           if forecast is not None else state.sinr_db)
    m = persona.threshold_margin_db
    g1 = thresholds.gamma1_db + m
    g2 = thresholds.gamma2_db + m
    g3 = thresholds.gamma3_db + m
    g4 = thresholds.gamma4_db + m

    grant = False
    if eff < g1:
        tier = Tier.CRITICAL
        delta = MAX_STEP_DB
        grant = True
        rationale = f"emergency boost +{delta} dB and PRB grant"
    elif eff < g2:
        tier = Tier.RISK
        delta = min(max(math.ceil(g2 - eff), 1), MAX_STEP_DB)
        rationale = f"preventive +{delta} dB to clear {g2:.1f} dB"
    elif eff < g3:
        if eff < g2 + 1.0:
            tier = Tier.OPTIMIZATION
            delta = 1
            rationale = "fine tune +1 dB off the band floor"
        else:
            tier = Tier.HOLD
            delta = 0
            rationale = "stable in the optimization band"
    else:
        tier = Tier.EFFICIENCY
        delta = -3 if eff - 3.0 >= g4 else -1
        rationale = f"trim {delta} dB, headroom above {g4:.1f} dB"

    thought = (f"mode={mode} sinr={state.sinr_db:.2f}dB eff={eff:.2f}dB "
               f"load={state.load:.3f} tx={state.tx_power_dbm:.1f}dBm "
               f"tier={tier.value}")
    trace = ReactTrace(thought=thought, action_rationale=rationale,
                       inputs_digest=_digest(state, forecast, feeds, persona,
                                             thresholds))
    return Action(power_delta_db=delta, emergency_prb_grant=grant, tier=tier,
                  trace=trace)


def reward(before: NetworkState, after: NetworkState, action: Action,
           thresholds: PolicyThresholds) -> RewardBreakdown:
    """Unweighted reward terms for one transition."""
    delta_sinr = after.sinr_db - before.sinr_db
    r_thr = (R_THRESHOLD_MET if after.sinr_db >= thresholds.gamma1_db
             else R_THRESHOLD_MISS)
    legal = action.power_delta_db in TIER_LEGAL_DELTAS[action.tier]
    safe = (action.tier is Tier.EFFICIENCY
            or after.sinr_db >= thresholds.gamma1_db)
    r_act = R_ACTION_GOOD if legal and safe else R_ACTION_BAD
    delta_power = max(0.0, after.tx_power_dbm - before.tx_power_dbm)
    total = (SINR_IMPROVEMENT_WEIGHT * delta_sinr + r_thr + r_act
             - POWER_PENALTY_WEIGHT * delta_power)
    return RewardBreakdown(delta_sinr_db=delta_sinr, r_threshold=r_thr,
                           r_action=r_act, delta_power_db=delta_power,
                           total=total)


def weighted_total(breakdown: RewardBreakdown, persona: Persona) -> float:
    """Persona-local learning signal; the unweighted total is what gets logged."""
    ws, wt, wa, wp = persona.reward_weights
    return (SINR_IMPROVEMENT_WEIGHT * ws * breakdown.delta_sinr_db
            + wt * breakdown.r_threshold + wa * breakdown.r_action
            - POWER_PENALTY_WEIGHT * wp * breakdown.delta_power_db)


@dataclass
class TraceLog:
    """Line-delimited Thought/Action records, one per tick."""
    records: list[dict] = field(default_factory=list)

    def append(self, timestamp: dt.datetime, trace: ReactTrace) -> None:
        self.records.append({
            "timestamp": timestamp.isoformat(timespec="minutes"),
            "thought": trace.thought,
            "action_rationale": trace.action_rationale,
            "inputs_digest": trace.inputs_digest,
        })

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def control_loop(world: CellWorld, engine: ForecastEngine | None,
                 feed_service, persona: Persona,
                 duration: int, thresholds: PolicyThresholds,
                 refresh_every: int = 5, horizon: int = 30,
                 trace_log: TraceLog | None = None) -> RunLog:
    """Collect, think, act, step, score — one row per tick.

    The forecast refreshes every ``refresh_every`` ticks once a full load
    window exists; before that, and whenever the forecaster fails, the tick
    degrades to reactive classification on the measured SINR.
    """
    log = RunLog(step_minutes=world.cfg.step_minutes)
    forecast: ForecastResult | None = None
    last_refresh = -10 ** 9
    window = engine.window if engine is not None else 0

    for tick in range(1, duration + 1):
        before = world.state
        mode = "proactive"
        if engine is None:
            forecast = None
            mode = "reactive"
        elif len(world.history) < window + 1:
            forecast = None
            mode = "warmup"
        elif tick - last_refresh >= refresh_every or forecast is None:
            recent = np.array([s.load for s in world.history[-window:]])
            try:
                forecast = engine.forecast(recent, before.timestamp, horizon)
                last_refresh = tick
            except Exception:
                forecast = None
                mode = "reactive-fallback"
        if engine is not None and forecast is None and mode == "proactive":
            mode = "reactive-fallback"

        signals = (feed_service.signals_between(
            before.timestamp, horizon) if feed_service is not None else [])
        action = decide(before, forecast, signals, persona, thresholds,
                        cfg=world.cfg, mode=mode)
        after = world.step(float(action.power_delta_db),
                           action.emergency_prb_grant)
        breakdown = reward(before, after, action, thresholds)
        realized = after.tx_power_dbm - before.tx_power_dbm
        log.append(LogRow(state=after, tier=action.tier.value,
                          action_db=realized, reward_total=breakdown.total))
        if trace_log is not None:
            trace_log.append(after.timestamp, action.trace)
    return log
