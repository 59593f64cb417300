"""Configuration and record types for the single-cell simulator."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum


class CarrierProfile(Enum):
    SUB6 = "sub6"
    MMWAVE = "mmwave"


@dataclass(frozen=True)
class SimConfig:
    """Static radio and environment parameters of the simulated cell.

    All power quantities are dBm, all losses dB. ``shadow_alpha`` is the
    per-step correlation of the slow-fading process; ``cell_path_km`` is the
    effective path length that per-km weather attenuation acts over.
    """

    base_power_dbm: float = 43.0
    path_loss_db: float = 120.0
    noise_floor_dbm: float = -104.0
    interference_base_dbm: float = -110.0
    interference_noise_sigma_db: float = 2.0
    shadow_sigma_db: float = 4.0
    shadow_alpha: float = 0.98
    fast_fading_sigma_db: float = 1.5
    carrier_profile: CarrierProfile = CarrierProfile.SUB6
    oxygen_band_60ghz: bool = False
    cell_path_km: float = 0.5
    power_min_dbm: float = 30.0
    power_max_dbm: float = 49.0
    step_minutes: int = 1
    prb_total: int = 273
    rng_seed: int = 1

    def __post_init__(self):
        if not (self.power_min_dbm <= self.base_power_dbm <= self.power_max_dbm):
            raise ValueError(
                f"base power {self.base_power_dbm} dBm outside "
                f"[{self.power_min_dbm}, {self.power_max_dbm}]")
        if not (0.0 <= self.shadow_alpha < 1.0):
            raise ValueError(f"shadow_alpha {self.shadow_alpha} not in [0, 1)")
        if self.shadow_sigma_db <= 0:
            raise ValueError("shadow_sigma_db must be positive")
        if self.step_minutes < 1:
            raise ValueError("step_minutes must be >= 1")


@dataclass(frozen=True)
class TrafficModel:
    """Diurnal demand model: base load plus two Gaussian rush-hour bumps.

    The residual term is a first-order autoregressive fluctuation with
    stationary deviation ``base_load_noise_sigma`` and per-step correlation
    ``noise_alpha``, so short-horizon demand is partially predictable the way
    real aggregate cell load is.
    """

    base_load: float = 0.30
    base_load_noise_sigma: float = 0.03
    noise_alpha: float = 0.95
    morning_peak_center: str = "08:00"
    morning_peak_sigma_min: float = 45.0
    morning_peak_amp: float = 0.35
    evening_peak_center: str = "18:30"
    evening_peak_sigma_min: float = 70.0
    evening_peak_amp: float = 0.40

    def __post_init__(self):
        if self.morning_peak_amp < 0 or self.evening_peak_amp < 0:
            raise ValueError("peak amplitudes must be >= 0")
        if self.morning_peak_sigma_min <= 0 or self.evening_peak_sigma_min <= 0:
            raise ValueError("peak sigmas must be > 0")
        if not (0.0 <= self.noise_alpha < 1.0):
            raise ValueError("noise_alpha must be in [0, 1)")


def parse_tod_minutes(text: str) -> int:
    """'HH:MM' -> minutes after midnight."""
    hh, mm = text.strip().split(":")
    tod = int(hh) * 60 + int(mm)
    if not (0 <= tod < 24 * 60):
        raise ValueError(f"time of day out of range: {text!r}")
    return tod


@dataclass(frozen=True)
class EventRecord:
    """A scheduled stress episode: festival, match, emergency, and so on."""

    event_id: str
    start: dt.datetime
    end: dt.datetime
    demand_multiplier: float
    crowd_density_factor: float
    location_tag: str = ""

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"event {self.event_id}: start must precede end")
        if not (1.0 <= self.demand_multiplier <= 5.0):
            raise ValueError(
                f"event {self.event_id}: demand_multiplier "
                f"{self.demand_multiplier} outside [1, 5]")
        if not (0.0 <= self.crowd_density_factor <= 1.0):
            raise ValueError(
                f"event {self.event_id}: crowd_density_factor outside [0, 1]")

    def active_at(self, t: dt.datetime) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: dt.datetime
    rain_mm_per_h: float = 0.0
    humidity_pct: float = 50.0
    temperature_c: float = 15.0
    foliage_loss_db: float = 2.0
    ducting_flag: bool = False

    def __post_init__(self):
        if self.rain_mm_per_h < 0:
            raise ValueError("rain rate must be >= 0")
        if not (0.0 <= self.humidity_pct <= 100.0):
            raise ValueError("humidity_pct outside [0, 100]")
        if not (2.0 <= self.foliage_loss_db <= 8.0):
            raise ValueError("foliage_loss_db outside seasonal [2, 8]")


CLEAR_SKY = WeatherRecord(timestamp=dt.datetime(2000, 1, 1), rain_mm_per_h=0.0,
                          humidity_pct=0.0, temperature_c=15.0,
                          foliage_loss_db=2.0, ducting_flag=False)


@dataclass(frozen=True)
class NetworkState:
    """One tick of the cell: channel terms, SINR, and resource usage."""

    timestamp: dt.datetime
    tx_power_dbm: float
    load: float
    interference_dbm: float
    shadow_db: float
    fast_fade_db: float
    weather_loss_db: float
    blockage_db: float
    sinr_db: float
    prb_used: int
    prb_total: int
    event_active: bool
    outage_flag: bool
