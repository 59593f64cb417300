"""Run-level key performance indicators and cross-run aggregation.

Outage rate is the percentage of ticks whose SINR sat below the critical
threshold; action rate is the percentage of ticks with a power move of at
least 1 dB. The energy proxy integrates transmit power over time (milliwatt
hours), which is enough to rank controllers without a PA efficiency model.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .simcore.world import RunLog

ACTION_MIN_DB = 1.0

KPI_FIELDS = ("outage_rate_pct", "action_rate_pct", "mean_sinr_db",
              "sinr_variance_db2", "mean_tx_power_dbm", "energy_proxy_mwh",
              "reward_sum")


def outage_rate_pct(log: RunLog) -> float:
    """100 * outage ticks / total ticks."""
    if len(log) == 0:
        raise ValueError("empty run log")
    return 100.0 * float(np.mean(log.outages()))


def action_rate_pct(log: RunLog) -> float:
    """100 * ticks with |power move| >= 1 dB / total ticks."""
    if len(log) == 0:
        raise ValueError("empty run log")
    return 100.0 * float(np.mean(np.abs(log.actions()) >= ACTION_MIN_DB))


def energy_proxy_mwh(log: RunLog) -> float:
    if len(log) == 0:
        raise ValueError("empty run log")
    milliwatts = np.power(10.0, log.tx_powers() / 10.0)
    return float(np.sum(milliwatts) * (log.step_minutes / 60.0))


def cov(values: Sequence[float]) -> float:
    """Coefficient of variation, population std over |mean|.

    A constant zero series is perfectly stable (0.0); spread around a zero
    mean has no meaningful scale and raises instead of dividing by zero.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise ValueError(f"need at least 2 values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    mean = float(arr.mean())
    std = float(arr.std())
    if mean == 0.0:
        if std == 0.0:
            return 0.0
        raise ValueError("undefined: zero mean with nonzero spread")
    return std / abs(mean)


@dataclass(frozen=True)
class KpiReport:
    run_id: str
    n_steps: int
    outage_rate_pct: float
    action_rate_pct: float
    mean_sinr_db: float
    sinr_variance_db2: float
    mean_tx_power_dbm: float
    energy_proxy_mwh: float
    reward_sum: float

    @classmethod
    def from_log(cls, run_id: str, log: RunLog) -> "KpiReport":
        if len(log) == 0:
            raise ValueError("empty run log")
        sinrs = log.sinrs()
        return cls(
            run_id=run_id,
            n_steps=len(log),
            outage_rate_pct=outage_rate_pct(log),
            action_rate_pct=action_rate_pct(log),
            mean_sinr_db=float(sinrs.mean()),
            sinr_variance_db2=float(sinrs.var()),
            mean_tx_power_dbm=float(log.tx_powers().mean()),
            energy_proxy_mwh=energy_proxy_mwh(log),
            reward_sum=float(log.rewards().sum()),
        )


@dataclass(frozen=True)
class AggregateRow:
    metric: str
    mean: float
    std: float
    cov: float


def aggregate(reports: Sequence[KpiReport]) -> list[AggregateRow]:
    """Per-metric mean, population std, and CoV across repeated runs."""
    if len(reports) < 2:
        raise ValueError(f"need at least 2 reports, got {len(reports)}")
    rows = []
    for name in KPI_FIELDS:
        values = np.array([getattr(r, name) for r in reports], dtype=float)
        mean = float(values.mean())
        std = float(values.std())
        c = cov(values) if (mean != 0.0 or std == 0.0) else float("nan")
        rows.append(AggregateRow(metric=name, mean=mean, std=std, cov=c))
    return rows


def write_aggregate_csv(rows: Sequence[AggregateRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std", "cov"])
        for row in rows:
            writer.writerow([row.metric, repr(row.mean), repr(row.std),
                             repr(row.cov)])


def format_report(report: KpiReport) -> str:
    lines = [
        f"run:               {report.run_id}",
        f"steps:             {report.n_steps}",
        f"outage rate:       {report.outage_rate_pct:.3f} %",
        f"action rate:       {report.action_rate_pct:.3f} %",
        f"mean SINR:         {report.mean_sinr_db:.3f} dB",
        f"SINR variance:     {report.sinr_variance_db2:.3f} dB^2",
        f"mean tx power:     {report.mean_tx_power_dbm:.3f} dBm",
        f"energy proxy:      {report.energy_proxy_mwh:.1f} mWh",
        f"reward sum:        {report.reward_sum:.2f}",
    ]
    return "\n".join(lines) + "\n"


def format_comparison(reports: dict[str, KpiReport]) -> str:
    """Side-by-side controller table, one row per controller."""
    header = (f"{'controller':<12} {'outage%':>8} {'action%':>8} "
              f"{'sinr dB':>8} {'var dB2':>8} {'tx dBm':>7} {'MWh':>9}")
    lines = [header, "-" * len(header)]
    for name, rep in reports.items():
        lines.append(
            f"{name:<12} {rep.outage_rate_pct:>8.3f} "
            f"{rep.action_rate_pct:>8.3f} {rep.mean_sinr_db:>8.3f} "
            f"{rep.sinr_variance_db2:>8.3f} {rep.mean_tx_power_dbm:>7.2f} "
            f"{rep.energy_proxy_mwh / 1e6:>9.4f}")
    return "\n".join(lines) + "\n"
