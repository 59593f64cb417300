"""Autoregressive forecasting and the accuracy metric."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .archive import load_archive, save_archive
from .features import LOAD_MAX, ContextSource
from .model import LstmModel

CI_Z = 1.96


@dataclass(frozen=True)
class ForecastResult:
    horizon_steps: int
    predicted_load: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    model_version: str
    timestamps: list[dt.datetime] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestamp", "predicted_load", "ci_low", "ci_high"])
            for k in range(self.horizon_steps):
                ts = (self.timestamps[k].isoformat(timespec="minutes")
                      if self.timestamps else str(k + 1))
                writer.writerow([ts, repr(float(self.predicted_load[k])),
                                 repr(float(self.ci_low[k])),
                                 repr(float(self.ci_high[k]))])


class ForecastEngine:
    """A trained model plus the context it needs to look ahead.

    Forecasts run the recent load window through the recurrence once, then
    decode autoregressively: each predicted load is fed back as the next
    input together with the scheduled context for the step it predicts.
    """

    def __init__(self, model: LstmModel, context: ContextSource,
                 residual_sigma: float, window: int = 60,
                 step_minutes: int = 1):
        self.model = model
        self.context = context
        self.residual_sigma = float(residual_sigma)
        self.window = window
        self.step_minutes = step_minutes

    def forecast(self, recent_loads: np.ndarray, anchor_time: dt.datetime,
                 horizon: int) -> ForecastResult:
        if horizon <= 0:
            raise ValueError(f"horizon must be positive: {horizon}")
        loads = np.asarray(recent_loads, dtype=np.float64)
        if len(loads) < self.window:
            raise ValueError(
                f"need {self.window} recent loads, got {len(loads)}")
        loads = loads[-self.window:]
        step = dt.timedelta(minutes=self.step_minutes)

        state = self.model.init_state()
        x = np.empty(self.model.input_dim)
        # replay the observed window; input at time tau carries the context
        # of tau+1, matching the training layout
        pred = 0.0
        for j in range(self.window):
            t_in = anchor_time - (self.window - 1 - j) * step
            x[0] = loads[j]
            x[1:] = self.context.at(t_in + step)
            pred = self.model.step(x, state)

        preds = np.empty(horizon)
        times = []
        for k in range(1, horizon + 1):
            t_k = anchor_time + k * step
            times.append(t_k)
            preds[k - 1] = min(max(pred, 0.0), LOAD_MAX)
            if k < horizon:
                x[0] = preds[k - 1]
                x[1:] = self.context.at(t_k + step)
                pred = self.model.step(x, state)

        margin = CI_Z * self.residual_sigma * np.sqrt(np.arange(1, horizon + 1))
        return ForecastResult(horizon_steps=horizon, predicted_load=preds,
                              ci_low=preds - margin, ci_high=preds + margin,
                              model_version=self.model.version,
                              timestamps=times)

    # -- persistence ---------------------------------------------------------
    def save(self, path: str | Path, extra_meta: dict | None = None) -> None:
        meta = self.model.state_meta()
        meta.update({"residual_sigma": self.residual_sigma,
                     "window": self.window,
                     "step_minutes": self.step_minutes})
        if extra_meta:
            meta.update(extra_meta)
        save_archive(path, self.model.params, meta)

    @classmethod
    def load(cls, path: str | Path, context: ContextSource) -> "ForecastEngine":
        tensors, meta = load_archive(path)
        model = LstmModel.from_tensors(tensors, meta)
        return cls(model=model, context=context,
                   residual_sigma=float(meta.get("residual_sigma", 0.0)),
                   window=int(meta.get("window", 60)),
                   step_minutes=int(meta.get("step_minutes", 1)))


def accuracy(predicted: np.ndarray, actual: np.ndarray,
             floor: float = 0.05) -> float:
    """100 minus the mean absolute percentage error, actuals floored."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise ValueError(
            f"length mismatch: {predicted.shape} vs {actual.shape}")
    if predicted.size == 0:
        raise ValueError("empty series")
    ratios = np.abs(predicted - actual) / np.maximum(actual, floor)
    return 100.0 * (1.0 - float(np.mean(ratios)))
