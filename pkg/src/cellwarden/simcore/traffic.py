"""Traffic demand: diurnal peaks, residual fluctuation, event multipliers."""

from __future__ import annotations

import datetime as dt
import math
from typing import Sequence

import numpy as np

from .config import EventRecord, TrafficModel, parse_tod_minutes

MINUTES_PER_DAY = 24 * 60
LOAD_CAP = 5.0


def _peak_term(tod_min: float, center_min: float, sigma_min: float,
               amp: float) -> float:
    # circular distance so a late-evening peak tails smoothly past midnight
    d = abs(tod_min - center_min)
    d = min(d, MINUTES_PER_DAY - d)
    return amp * math.exp(-(d * d) / (2.0 * sigma_min * sigma_min))


def diurnal_load(t: dt.datetime, model: TrafficModel) -> float:
    """Deterministic part of the demand curve (no residual, no events)."""
    tod = t.hour * 60 + t.minute + t.second / 60.0
    return (model.base_load
            + _peak_term(tod, parse_tod_minutes(model.morning_peak_center),
                         model.morning_peak_sigma_min, model.morning_peak_amp)
            + _peak_term(tod, parse_tod_minutes(model.evening_peak_center),
                         model.evening_peak_sigma_min, model.evening_peak_amp))


def event_multiplier(t: dt.datetime, events: Sequence[EventRecord]) -> float:
    """Demand multiplier at ``t``; overlapping events combine by maximum."""
    mult = 1.0
    for ev in events:
        if ev.active_at(t):
            mult = max(mult, ev.demand_multiplier)
    return mult


def noise_step(prev_noise: float, model: TrafficModel, z: float) -> float:
    """Advance the AR(1) residual one step given a standard-normal draw."""
    a = model.noise_alpha
    return a * prev_noise + math.sqrt(1.0 - a * a) * model.base_load_noise_sigma * z


def traffic_load(t: dt.datetime, model: TrafficModel,
                 events: Sequence[EventRecord],
                 rng: np.random.Generator | None = None,
                 noise: float | None = None) -> float:
    """Demand as a fraction of nominal capacity at time ``t``.

    ``noise`` is the residual term; when omitted a stationary sample is drawn
    from ``rng``. The stepping world supplies the correlated residual
    explicitly so the stream stays action-independent.
    """
    if noise is None:
        noise = (float(rng.standard_normal()) * model.base_load_noise_sigma
                 if rng is not None else 0.0)
    load = (diurnal_load(t, model) + noise) * event_multiplier(t, events)
    return min(max(load, 0.0), LOAD_CAP)
