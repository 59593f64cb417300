"""Channel impairments and the link budget that produces SINR."""

from __future__ import annotations

import datetime as dt
import math
from typing import Sequence

import numpy as np

from .config import CarrierProfile, EventRecord, SimConfig, WeatherRecord

# interference model constants, all dB
LOAD_INTERFERENCE_SPAN_DB = 10.0      # added at full load
BUSINESS_HOURS_DB = 3.0               # industrial sources, 09:00-17:00
CROWD_BASE_DB = 2.0                   # any gathering
CROWD_DENSITY_SPAN_DB = 6.0           # scales with crowd density up to +8 total

RAIN_SATURATION_MM_PER_H = 50.0       # heavy-rain ceiling
MMWAVE_RAIN_DB_PER_KM = 15.0
SUB6_RAIN_DB_PER_KM = 1.0
HUMIDITY_MAX_DB_PER_KM = 2.0
OXYGEN_BAND_DB = 1.0                  # 60 GHz class absorption

BLOCKAGE_PROB_PER_DENSITY = 0.1
BLOCKAGE_MIN_DB = 10.0
BLOCKAGE_MAX_DB = 20.0


def power_sum_dbm(a_dbm: float, b_dbm: float) -> float:
    """Sum of two powers expressed in dBm (linear-domain addition)."""
    if a_dbm == -math.inf:
        return b_dbm
    if b_dbm == -math.inf:
        return a_dbm
    return 10.0 * math.log10(10.0 ** (a_dbm / 10.0) + 10.0 ** (b_dbm / 10.0))


def is_business_hours(t: dt.datetime) -> bool:
    return 9 * 60 <= t.hour * 60 + t.minute < 17 * 60


def crowd_density_at(t: dt.datetime, events: Sequence[EventRecord]) -> float:
    """Max crowd density among events active at ``t``; 0 when none."""
    density = 0.0
    for ev in events:
        if ev.active_at(t):
            density = max(density, ev.crowd_density_factor)
    return density


def interference_dbm(t: dt.datetime, load: float,
                     events: Sequence[EventRecord],
                     rng: np.random.Generator | None = None,
                     noise: float | None = None,
                     base_dbm: float = -110.0,
                     noise_sigma_db: float = 2.0) -> float:
    """Aggregate co-channel interference seen by the cell at time ``t``.

    Traffic-coupled and crowd terms are additive in dB on top of the distant
    cell floor; ``noise`` (dB) is the random variation, drawn from ``rng``
    when not supplied.
    """
    if noise is None:
        noise = (float(rng.standard_normal()) * noise_sigma_db
                 if rng is not None else 0.0)
    value = base_dbm + LOAD_INTERFERENCE_SPAN_DB * min(load, 1.0)
    if is_business_hours(t):
        value += BUSINESS_HOURS_DB
    density = crowd_density_at(t, events)
    if any(ev.active_at(t) for ev in events):
        value += CROWD_BASE_DB + CROWD_DENSITY_SPAN_DB * density
    return value + noise


def shadow_step(prev_shadow_db: float, cfg: SimConfig,
                rng: np.random.Generator | None = None,
                z: float | None = None) -> float:
    """Advance the correlated slow-fading process one step.

    The innovation scaling keeps the stationary deviation at
    ``cfg.shadow_sigma_db`` for any correlation coefficient.
    """
    if z is None:
        z = float(rng.standard_normal()) if rng is not None else 0.0
    a = cfg.shadow_alpha
    return a * prev_shadow_db + math.sqrt(1.0 - a * a) * cfg.shadow_sigma_db * z


def weather_loss_db(w: WeatherRecord, cfg: SimConfig) -> float:
    """Atmospheric loss over the configured path for the current weather.

    Sub-6 GHz carriers see only a small rain term. Millimeter-wave carriers
    add foliage, humidity absorption, and optionally the 60 GHz oxygen band.
    Rain and humidity terms are per-km and scale with ``cell_path_km``;
    foliage and oxygen terms are absolute.
    """
    rain_frac = min(w.rain_mm_per_h / RAIN_SATURATION_MM_PER_H, 1.0)
    if cfg.carrier_profile is CarrierProfile.SUB6:
        return SUB6_RAIN_DB_PER_KM * rain_frac * cfg.cell_path_km
    loss = MMWAVE_RAIN_DB_PER_KM * rain_frac * cfg.cell_path_km
    loss += w.foliage_loss_db
    loss += HUMIDITY_MAX_DB_PER_KM * (w.humidity_pct / 100.0) * cfg.cell_path_km
    if cfg.oxygen_band_60ghz:
        loss += OXYGEN_BAND_DB
    return loss


def blockage_db(event_active: bool, crowd_density_factor: float,
                carrier: CarrierProfile,
                rng: np.random.Generator | None = None,
                draws: tuple[float, float] | None = None) -> float:
    """Body-blockage loss: mmWave-only, only during gatherings.

    Each step blocks with probability ``0.1 * density`` and then costs a
    uniform 10-20 dB. ``draws`` supplies the two uniform variates explicitly;
    otherwise they come from ``rng``.
    """
    if carrier is CarrierProfile.SUB6 or not event_active:
        return 0.0
    if draws is None:
        if rng is None:
            return 0.0
        draws = (float(rng.uniform()), float(rng.uniform()))
    happens, magnitude = draws
    if happens < BLOCKAGE_PROB_PER_DENSITY * crowd_density_factor:
        return BLOCKAGE_MIN_DB + (BLOCKAGE_MAX_DB - BLOCKAGE_MIN_DB) * magnitude
    return 0.0


def compute_sinr(tx_power_dbm: float, interference_dbm_: float,
                 shadow_db: float, fast_fade_db: float,
                 weather_loss_db_: float, blockage_db_: float,
                 cfg: SimConfig) -> float:
    """Link budget: received signal over interference-plus-noise, in dB."""
    return (tx_power_dbm
            - cfg.path_loss_db
            - shadow_db
            - fast_fade_db
            - weather_loss_db_
            - blockage_db_
            - power_sum_dbm(interference_dbm_, cfg.noise_floor_dbm))
