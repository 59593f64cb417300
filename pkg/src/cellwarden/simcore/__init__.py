"""Deterministic minute-resolution cell simulator."""

from .channel import (blockage_db, compute_sinr, crowd_density_at,
                      interference_dbm, is_business_hours, power_sum_dbm,
                      shadow_step, weather_loss_db)
from .config import (CLEAR_SKY, CarrierProfile, EventRecord, NetworkState,
                     SimConfig, TrafficModel, WeatherRecord, parse_tod_minutes)
from .traffic import diurnal_load, event_multiplier, noise_step, traffic_load
from .weather import WEATHER_COLUMNS, SyntheticWeather, WeatherSeries
from .world import LOG_COLUMNS, CellWorld, LogRow, RunLog

__all__ = [
    "CLEAR_SKY", "LOG_COLUMNS", "WEATHER_COLUMNS", "CarrierProfile",
    "CellWorld", "EventRecord", "LogRow", "NetworkState", "RunLog",
    "SimConfig", "SyntheticWeather", "TrafficModel", "WeatherRecord",
    "WeatherSeries", "blockage_db", "compute_sinr", "crowd_density_at",
    "diurnal_load", "event_multiplier", "interference_dbm",
    "is_business_hours", "noise_step", "parse_tod_minutes", "power_sum_dbm",
    "shadow_step", "traffic_load", "weather_loss_db",
]
