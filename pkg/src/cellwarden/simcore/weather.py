"""Weather series: synthetic generation and CSV round-trip."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import WeatherRecord

WEATHER_COLUMNS = ["timestamp", "rain_mm_per_h", "humidity_pct",
                   "temperature_c", "foliage_loss_db", "ducting_flag"]


@dataclass(frozen=True)
class SyntheticWeather:
    """Parameters of the seeded weather generator.

    Rain arrives as discrete episodes (expected ``rain_events_per_day``),
    each with a random onset, duration, and peak rate shaped by a raised
    cosine. Humidity follows a daily cycle plus a bump during rain.
    """

    foliage_db: float = 2.5
    rain_events_per_day: float = 0.5
    rain_peak_mm_per_h: float = 18.0
    rain_duration_min_mean: float = 90.0
    rain_window: tuple[str, str] | None = None   # restrict onsets, 'HH:MM'
    humidity_base_pct: float = 55.0
    humidity_swing_pct: float = 20.0
    temperature_base_c: float = 16.0
    temperature_swing_c: float = 6.0
    ducting_prob_per_day: float = 0.02


class WeatherSeries:
    """Minute-gridded weather over a simulation span."""

    def __init__(self, start: dt.datetime, step_minutes: int,
                 records: list[WeatherRecord]):
        self.start = start
        self.step_minutes = step_minutes
        self.records = records

    def __len__(self) -> int:
        return len(self.records)

    def at(self, t: dt.datetime) -> WeatherRecord:
        idx = int((t - self.start).total_seconds() // (60 * self.step_minutes))
        idx = min(max(idx, 0), len(self.records) - 1)
        return self.records[idx]

    @classmethod
    def synthesize(cls, params: SyntheticWeather, start: dt.datetime,
                   n_steps: int, step_minutes: int,
                   seed_seq: np.random.SeedSequence) -> "WeatherSeries":
        rng = np.random.default_rng(seed_seq)
        minutes = np.arange(n_steps) * step_minutes
        tod = ((start.hour * 60 + start.minute) + minutes) % (24 * 60)
        day_phase = 2.0 * math.pi * (tod / (24 * 60))

        # afternoon-peaking temperature and anti-phased humidity
        temperature = (params.temperature_base_c
                       + params.temperature_swing_c * np.sin(day_phase - math.pi / 2))
        humidity = (params.humidity_base_pct
                    - params.humidity_swing_pct * np.sin(day_phase - math.pi / 2))

        rain = np.zeros(n_steps)
        days = int(math.ceil(n_steps * step_minutes / (24 * 60)))
        n_episodes = rng.poisson(params.rain_events_per_day * days)
        lo, hi = 0, 24 * 60
        if params.rain_window is not None:
            from .config import parse_tod_minutes
            lo = parse_tod_minutes(params.rain_window[0])
            hi = parse_tod_minutes(params.rain_window[1])
        for _ in range(n_episodes):
            day = rng.integers(0, days)
            onset_tod = rng.uniform(lo, hi)
            onset = int((day * 24 * 60 + onset_tod
                         - (start.hour * 60 + start.minute)) // step_minutes)
            duration = max(int(rng.exponential(params.rain_duration_min_mean)
                               // step_minutes), 10)
            peak = rng.uniform(0.3, 1.0) * params.rain_peak_mm_per_h
            for k in range(duration):
                i = onset + k
                if 0 <= i < n_steps:
                    shape = 0.5 * (1 - math.cos(2 * math.pi * k / duration))
                    rain[i] = max(rain[i], peak * shape)
        humidity = np.clip(humidity + 25.0 * (rain > 0), 0.0, 100.0)

        ducting_days = rng.uniform(size=days) < params.ducting_prob_per_day

        records = []
        for i in range(n_steps):
            t = start + dt.timedelta(minutes=int(minutes[i]))
            day = int(minutes[i] // (24 * 60))
            records.append(WeatherRecord(
                timestamp=t,
                rain_mm_per_h=float(rain[i]),
                humidity_pct=float(humidity[i]),
                temperature_c=float(temperature[i]),
                foliage_loss_db=params.foliage_db,
                ducting_flag=bool(ducting_days[min(day, days - 1)]),
            ))
        return cls(start, step_minutes, records)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(WEATHER_COLUMNS)
            for r in self.records:
                writer.writerow([
                    r.timestamp.isoformat(timespec="minutes"),
                    repr(float(r.rain_mm_per_h)),
                    repr(float(r.humidity_pct)),
                    repr(float(r.temperature_c)),
                    repr(float(r.foliage_loss_db)),
                    int(r.ducting_flag),
                ])

    @classmethod
    def read_csv(cls, path: str | Path) -> "WeatherSeries":
        records = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != WEATHER_COLUMNS:
                raise ValueError(
                    f"weather CSV columns {reader.fieldnames} != {WEATHER_COLUMNS}")
            for row in reader:
                records.append(WeatherRecord(
                    timestamp=dt.datetime.fromisoformat(row["timestamp"]),
                    rain_mm_per_h=float(row["rain_mm_per_h"]),
                    humidity_pct=float(row["humidity_pct"]),
                    temperature_c=float(row["temperature_c"]),
                    foliage_loss_db=float(row["foliage_loss_db"]),
                    ducting_flag=row["ducting_flag"] in ("1", "True", "true"),
                ))
        if not records:
            raise ValueError(f"weather CSV {path} is empty")
        step = 1
        if len(records) > 1:
            step = int((records[1].timestamp - records[0].timestamp).total_seconds() // 60)
        for i in range(1, len(records)):
            expect = records[i - 1].timestamp + dt.timedelta(minutes=step)
            if records[i].timestamp != expect:
                raise ValueError(
                    f"weather CSV gap: expected {expect.isoformat()} "
                    f"at row {i + 1}")
        return cls(records[0].timestamp, step, records)
