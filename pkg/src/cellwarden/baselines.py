"""Fixed-power and threshold-reactive baseline controllers.

Both baselines share the proactive agent's reward accounting and log schema
so the three controllers compare row for row under common random numbers.
"""

from __future__ import annotations

from .agent import (Action, Persona, PolicyThresholds, ReactTrace, Tier,
                    TraceLog, control_loop, decide, reward)
from .simcore.config import NetworkState
from .simcore.world import CellWorld, LogRow, RunLog

FIXED_PERSONA = Persona("FixedPower", threshold_margin_db=0.0,
                        forecast_weight=0.0)
REACTIVE_PERSONA = Persona("ReactiveAgent", threshold_margin_db=0.0,
                           forecast_weight=0.0)


def fixed_policy(state: NetworkState) -> Action:
    """Hold the configured power no matter what the channel does."""
    trace = ReactTrace(
        thought=f"fixed policy holds {state.tx_power_dbm:.1f} dBm",
        action_rationale="no control", inputs_digest="fixed")
    return Action(power_delta_db=0, emergency_prb_grant=False, tier=Tier.HOLD,
                  trace=trace)


def reactive_policy(state: NetworkState,
                    thresholds: PolicyThresholds) -> Action:
    """Tier policy on the measured SINR alone, no margin, no look-ahead."""
    return decide(state, forecast=None, feeds=[], persona=REACTIVE_PERSONA,
                  thresholds=thresholds, mode="reactive")


def run_fixed(world: CellWorld, duration: int,
              thresholds: PolicyThresholds | None = None) -> RunLog:
    thresholds = thresholds or PolicyThresholds()
    log = RunLog(step_minutes=world.cfg.step_minutes)
    for _ in range(duration):
        before = world.state
        action = fixed_policy(before)
        after = world.step(0.0, False)
        breakdown = reward(before, after, action, thresholds)
        log.append(LogRow(state=after, tier=action.tier.value, action_db=0.0,
                          reward_total=breakdown.total))
    return log


def run_reactive(world: CellWorld, duration: int,
                 thresholds: PolicyThresholds | None = None,
                 trace_log: TraceLog | None = None) -> RunLog:
    thresholds = thresholds or PolicyThresholds()
    return control_loop(world, engine=None, feed_service=None,
                        persona=REACTIVE_PERSONA, duration=duration,
                        thresholds=thresholds, trace_log=trace_log)
