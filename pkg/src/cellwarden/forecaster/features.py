"""Feature engineering for the forecaster.

A supervised sample pairs a window of past load fractions with contextual
signals and the load ``horizon`` steps past the window end. Context (time
encoding, event schedule, weather forecast) is forward-looking: each window
step carries the context of the step it helps predict, so schedules known
in advance can shape the prediction before the load itself moves.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..feeds import DEMAND_EVENT_FLOOR, SignalKind, ValidatedSignal
from ..simcore.config import EventRecord
from ..simcore.weather import WeatherSeries

WINDOW = 60
CONTEXT_DIM = 13   # sin/cos tod, 7x day-of-week, event flag, magnitude, rain, humidity
STEP_DIM = 1 + CONTEXT_DIM
FLAT_DIM = WINDOW + CONTEXT_DIM

EVENT_MAGNITUDE_SPAN = 4.0   # demand multiplier 1..5 maps to [0, 1]
RAIN_NORM_MM_H = 50.0
LOAD_MAX = 5.0


def context_vector(t: dt.datetime, event_flag: bool, event_magnitude: float,
                   rain_mm_h: float, humidity_pct: float) -> np.ndarray:
    """Context features for one timestamp, all in [-1, 1] or [0, 1]."""
    out = np.zeros(CONTEXT_DIM)
    tod = (t.hour * 60 + t.minute) / 1440.0 * 2.0 * math.pi
    out[0] = math.sin(tod)
    out[1] = math.cos(tod)
    out[2 + t.weekday()] = 1.0
    out[9] = 1.0 if event_flag else 0.0
    out[10] = min(max((event_magnitude - 1.0) / EVENT_MAGNITUDE_SPAN, 0.0), 1.0)
    out[11] = min(max(rain_mm_h / RAIN_NORM_MM_H, 0.0), 1.0)
    out[12] = min(max(humidity_pct / 100.0, 0.0), 1.0)
    return out


@dataclass(frozen=True)
class FeatureVector:
    """Flat view of one sample's inputs, with range checks."""
    load_history_window: np.ndarray
    context: np.ndarray

    def __post_init__(self):
        if self.load_history_window.shape != (WINDOW,):
            raise ValueError(f"window must have {WINDOW} entries")
        if self.context.shape != (CONTEXT_DIM,):
            raise ValueError(f"context must have {CONTEXT_DIM} entries")
        flat = self.flat()
        if not np.all(np.isfinite(flat)):
            raise ValueError("feature vector has non-finite entries")
        if np.any(self.load_history_window < 0) or np.any(
                self.load_history_window > LOAD_MAX):
            raise ValueError("load history outside [0, 5]")
        if np.any(self.context < -1.0) or np.any(self.context > 1.0):
            raise ValueError("context features outside [-1, 1]")

    def flat(self) -> np.ndarray:
        return np.concatenate([self.load_history_window, self.context])


class ContextSource:
    """Answers context queries for any timestamp, past or scheduled future.

    ``event_fn`` maps a timestamp to (flag, demand multiplier); ``rain_fn``
    and ``humidity_fn`` return the forecast weather. Defaults are neutral.
    """

    def __init__(self,
                 event_fn: Callable[[dt.datetime], tuple[bool, float]] | None = None,
                 rain_fn: Callable[[dt.datetime], float] | None = None,
                 humidity_fn: Callable[[dt.datetime], float] | None = None):
        self.event_fn = event_fn or (lambda t: (False, 1.0))
        self.rain_fn = rain_fn or (lambda t: 0.0)
        self.humidity_fn = humidity_fn or (lambda t: 50.0)

    def at(self, t: dt.datetime) -> np.ndarray:
        flag, mag = self.event_fn(t)
        return context_vector(t, flag, mag, self.rain_fn(t), self.humidity_fn(t))

    @classmethod
    def from_scenario(cls, events: Sequence[EventRecord],
                      weather: WeatherSeries | None = None) -> "ContextSource":
        events = list(events)

        def event_fn(t: dt.datetime) -> tuple[bool, float]:
            active = [ev for ev in events if ev.active_at(t)]
            if not active:
                return False, 1.0
            return True, max(ev.demand_multiplier for ev in active)

        if weather is None:
            return cls(event_fn=event_fn)

        def rain_fn(t: dt.datetime) -> float:
            try:
                return weather.at(t).rain_mm_per_h
            except KeyError:
                return 0.0

        def humidity_fn(t: dt.datetime) -> float:
            try:
                return weather.at(t).humidity_pct
            except KeyError:
                return 50.0

        return cls(event_fn=event_fn, rain_fn=rain_fn, humidity_fn=humidity_fn)

    @classmethod
    def from_signals(cls, signals: Sequence[ValidatedSignal]) -> "ContextSource":
        """Consensus feed values, keyed by timestamp; neutral where absent."""
        demand = {s.timestamp: s.consensus_value for s in signals
                  if s.signal_kind is SignalKind.EVENT_DEMAND}
        rain = {s.timestamp: s.consensus_value for s in signals
                if s.signal_kind is SignalKind.RAIN_RATE}

        def event_fn(t: dt.datetime) -> tuple[bool, float]:
            mult = demand.get(t, 1.0)
            if mult < DEMAND_EVENT_FLOOR:
                return False, 1.0
            return True, mult

        return cls(event_fn=event_fn,
                   rain_fn=lambda t: max(rain.get(t, 0.0), 0.0))


@dataclass
class Dataset:
    """Sliding-window supervised pairs over one contiguous log.

    Tensors are materialized per batch from the shared ``loads`` and
    ``context`` arrays, so the dataset stays small even for a 60-day corpus.
    Samples are chronological; the first ``split_index`` are training, the
    rest validation.
    """
    timestamps: list[dt.datetime]
    loads: np.ndarray
    context: np.ndarray
    window: int = WINDOW
    horizon: int = 1
    split_index: int = 0

    def __len__(self) -> int:
        return len(self.loads) - self.window - self.horizon + 1

    def target_index(self, i: int) -> int:
        return i + self.window - 1 + self.horizon

    def anchor_time(self, i: int) -> dt.datetime:
        return self.timestamps[i + self.window - 1]

    def train_indices(self) -> np.ndarray:
        return np.arange(self.split_index)

    def val_indices(self) -> np.ndarray:
        return np.arange(self.split_index, len(self))

    def batch(self, indices: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(indices, dtype=np.intp)
        b, w, h = len(idx), self.window, self.horizon
        x = np.empty((b, w, STEP_DIM))
        offsets = idx[:, None] + np.arange(w)[None, :]
        x[:, :, 0] = self.loads[offsets]
        x[:, :, 1:] = self.context[offsets + h]
        y = self.loads[idx + w - 1 + h]
        return x, y

    def targets(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.intp)
        return self.loads[idx + self.window - 1 + self.horizon]

    def flat_features(self, i: int) -> FeatureVector:
        return FeatureVector(
            load_history_window=self.loads[i:i + self.window].copy(),
            context=self.context[self.target_index(i)].copy())


def build_dataset(timestamps: Sequence[dt.datetime], loads: Sequence[float],
                  context_source: ContextSource, window: int = WINDOW,
                  horizon: int = 1, val_fraction: float = 0.2,
                  step_minutes: int = 1) -> Dataset:
    """Assemble supervised pairs, enforcing a gap-free minute grid."""
    timestamps = list(timestamps)
    n = len(timestamps)
    if n < window + horizon:
        raise ValueError(
            f"log covers {n} steps; need at least {window + horizon}")
    step = dt.timedelta(minutes=step_minutes)
    for k in range(1, n):
        expected = timestamps[k - 1] + step
        if timestamps[k] != expected:
            raise ValueError(
                f"log gap: first missing timestamp "
                f"{expected.isoformat(timespec='minutes')}")
    loads = np.asarray(loads, dtype=np.float64)
    context = np.stack([context_source.at(t) for t in timestamps])
    ds = Dataset(timestamps=timestamps, loads=loads, context=context,
                 window=window, horizon=horizon)
    n_samples = len(ds)
    ds.split_index = max(1, int(round(n_samples * (1.0 - val_fraction))))
    return ds
