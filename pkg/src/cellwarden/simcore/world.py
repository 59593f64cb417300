"""The stepping cell world and its run log.

Environment randomness (traffic residual, interference noise, fading,
blockage, weather) is pre-drawn at construction from per-channel streams
keyed by ``(seed, channel)``. Controller actions therefore cannot perturb
the environment draws, which makes paired runs of different controllers on
the same scenario directly comparable.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import (blockage_db, compute_sinr, crowd_density_at,
                      interference_dbm, shadow_step, weather_loss_db)
from .config import (CarrierProfile, EventRecord, NetworkState, SimConfig,
                     TrafficModel)
from .traffic import LOAD_CAP, diurnal_load, event_multiplier
from .weather import WeatherSeries

# channel ids for the keyed environment streams
_CH_TRAFFIC = 1
_CH_INTERFERENCE = 2
_CH_SHADOW = 3
_CH_FASTFADE = 4
_CH_BLOCKAGE = 5

LOG_COLUMNS = ["timestamp", "tx_power_dbm", "load", "interference_dbm",
               "shadow_db", "fast_fade_db", "weather_loss_db", "blockage_db",
               "sinr_db", "prb_used", "event_active", "tier", "action_db",
               "reward_total", "outage_flag"]

PRB_SCHEDULER_CAP = 0.9  # share of the pool usable without an emergency grant


@dataclass
class LogRow:
    state: NetworkState
    tier: str = "hold"
    action_db: float = 0.0
    reward_total: float = 0.0


class RunLog:
    """Ordered per-tick rows with exact-schema CSV round-trip."""

    def __init__(self, step_minutes: int = 1):
        self.rows: list[LogRow] = []
        self.step_minutes = step_minutes

    def append(self, row: LogRow) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def loads(self) -> np.ndarray:
        return np.array([r.state.load for r in self.rows])

    def sinrs(self) -> np.ndarray:
        return np.array([r.state.sinr_db for r in self.rows])

    def tx_powers(self) -> np.ndarray:
        return np.array([r.state.tx_power_dbm for r in self.rows])

    def actions(self) -> np.ndarray:
        return np.array([r.action_db for r in self.rows])

    def rewards(self) -> np.ndarray:
        return np.array([r.reward_total for r in self.rows])

    def outages(self) -> np.ndarray:
        return np.array([r.state.outage_flag for r in self.rows], dtype=bool)

    def timestamps(self) -> list[dt.datetime]:
        return [r.state.timestamp for r in self.rows]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            for r in self.rows:
                s = r.state
                writer.writerow([
                    s.timestamp.isoformat(timespec="minutes"),
                    repr(float(s.tx_power_dbm)),
                    repr(float(s.load)),
                    repr(float(s.interference_dbm)),
                    repr(float(s.shadow_db)),
                    repr(float(s.fast_fade_db)),
                    repr(float(s.weather_loss_db)),
                    repr(float(s.blockage_db)),
                    repr(float(s.sinr_db)),
                    int(s.prb_used),
                    int(s.event_active),
                    r.tier,
                    repr(float(r.action_db)),
                    repr(float(r.reward_total)),
                    int(s.outage_flag),
                ])

    @classmethod
    def read_csv(cls, path: str | Path, prb_total: int = 273) -> "RunLog":
        log = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != LOG_COLUMNS:
                raise ValueError(
                    f"run log columns {reader.fieldnames} != {LOG_COLUMNS}")
            for row in reader:
                state = NetworkState(
                    timestamp=dt.datetime.fromisoformat(row["timestamp"]),
                    tx_power_dbm=float(row["tx_power_dbm"]),
                    load=float(row["load"]),
                    interference_dbm=float(row["interference_dbm"]),
                    shadow_db=float(row["shadow_db"]),
                    fast_fade_db=float(row["fast_fade_db"]),
                    weather_loss_db=float(row["weather_loss_db"]),
                    blockage_db=float(row["blockage_db"]),
                    sinr_db=float(row["sinr_db"]),
                    prb_used=int(row["prb_used"]),
                    prb_total=prb_total,
                    event_active=row["event_active"] == "1",
                    outage_flag=row["outage_flag"] == "1",
                )
                log.append(LogRow(state=state, tier=row["tier"],
                                  action_db=float(row["action_db"]),
                                  reward_total=float(row["reward_total"])))
        if len(log) >= 2:
            ts = log.timestamps()
            log.step_minutes = int((ts[1] - ts[0]).total_seconds() // 60)
        return log


class CellWorld:
    """One cell stepping minute-by-minute through a scenario.

    ``reset`` produces a pre-roll state one step before ``start``; each
    ``step`` then advances the clock, applies the power action, draws the
    environment for the new tick from the pre-drawn streams, and evaluates
    the link budget.
    """

    def __init__(self, cfg: SimConfig, traffic: TrafficModel,
                 events: Sequence[EventRecord], weather: WeatherSeries,
                 start: dt.datetime, n_steps: int,
                 outage_threshold_db: float = 15.0):
        self.cfg = cfg
        self.traffic = traffic
        self.events = list(events)
        self.weather = weather
        self.start = start
        self.n_steps = n_steps
        self.outage_threshold_db = outage_threshold_db

        n = n_steps + 1  # index 0 is the pre-roll tick
        seed = cfg.rng_seed

        def stream(channel: int) -> np.random.Generator:
            return np.random.default_rng(np.random.SeedSequence([seed, channel]))

        self._traffic_z = stream(_CH_TRAFFIC).standard_normal(n)
        self._interf_z = stream(_CH_INTERFERENCE).standard_normal(n)
        self._shadow_z = stream(_CH_SHADOW).standard_normal(n)
        self._fast_z = stream(_CH_FASTFADE).standard_normal(n)
        blk = stream(_CH_BLOCKAGE)
        self._block_p = blk.uniform(size=n)
        self._block_mag = blk.uniform(size=n)

        # correlated residual demand, stationary from the first tick
        a = traffic.noise_alpha
        sig = traffic.base_load_noise_sigma
        noise = np.empty(n)
        noise[0] = sig * self._traffic_z[0]
        innov = math.sqrt(1.0 - a * a) * sig
        for i in range(1, n):
            noise[i] = a * noise[i - 1] + innov * self._traffic_z[i]
        self._traffic_noise = noise

        self.tick = 0
        self.state: NetworkState | None = None
        self.history: list[NetworkState] = []
        self.reset()

    # -- time helpers -----------------------------------------------------
    def time_at(self, tick: int) -> dt.datetime:
        return self.start + dt.timedelta(
            minutes=(tick - 1) * self.cfg.step_minutes)

    # -- environment ------------------------------------------------------
    def _environment(self, tick: int) -> dict:
        t = self.time_at(tick)
        load = (diurnal_load(t, self.traffic) + self._traffic_noise[tick])
        load = min(max(load * event_multiplier(t, self.events), 0.0), LOAD_CAP)
        event_active = any(ev.active_at(t) for ev in self.events)
        interference = interference_dbm(
            t, load, self.events,
            noise=float(self._interf_z[tick]) * self.cfg.interference_noise_sigma_db,
            base_dbm=self.cfg.interference_base_dbm,
            noise_sigma_db=self.cfg.interference_noise_sigma_db)
        w = self.weather.at(t)
        return {
            "t": t,
            "load": load,
            "event_active": event_active,
            "interference": interference,
            "fast_fade": float(self._fast_z[tick]) * self.cfg.fast_fading_sigma_db,
            "weather_loss": weather_loss_db(w, self.cfg),
            "blockage": blockage_db(
                event_active, crowd_density_at(t, self.events),
                self.cfg.carrier_profile,
                draws=(float(self._block_p[tick]), float(self._block_mag[tick]))),
        }

    def _make_state(self, tick: int, tx_power: float, shadow: float,
                    emergency_prb_grant: bool) -> NetworkState:
        env = self._environment(tick)
        sinr = compute_sinr(tx_power, env["interference"], shadow,
                            env["fast_fade"], env["weather_loss"],
                            env["blockage"], self.cfg)
        cap = self.cfg.prb_total if emergency_prb_grant else int(
            PRB_SCHEDULER_CAP * self.cfg.prb_total)
        prb_used = min(int(round(min(env["load"], 1.0) * self.cfg.prb_total)), cap)
        return NetworkState(
            timestamp=env["t"],
            tx_power_dbm=tx_power,
            load=env["load"],
            interference_dbm=env["interference"],
            shadow_db=shadow,
            fast_fade_db=env["fast_fade"],
            weather_loss_db=env["weather_loss"],
            blockage_db=env["blockage"],
            sinr_db=sinr,
            prb_used=prb_used,
            prb_total=self.cfg.prb_total,
            event_active=env["event_active"],
            outage_flag=sinr < self.outage_threshold_db,
        )

    # -- lifecycle ---------------------------------------------------------
    def reset(self) -> NetworkState:
        self.tick = 0
        self._shadow = self.cfg.shadow_sigma_db * float(self._shadow_z[0])
        self.state = self._make_state(0, self.cfg.base_power_dbm, self._shadow,
                                      emergency_prb_grant=False)
        self.history = [self.state]
        return self.state

    def step(self, power_delta_db: float = 0.0,
             emergency_prb_grant: bool = False) -> NetworkState:
        if not math.isfinite(power_delta_db):
            raise ValueError(f"non-finite power delta: {power_delta_db}")
        if self.tick >= self.n_steps:
            raise RuntimeError("scenario exhausted")
        self.tick += 1
        self._shadow = shadow_step(self._shadow, self.cfg,
                                   z=float(self._shadow_z[self.tick]))
        tx = min(max(self.state.tx_power_dbm + power_delta_db,
                     self.cfg.power_min_dbm), self.cfg.power_max_dbm)
        self.state = self._make_state(self.tick, tx, self._shadow,
                                      emergency_prb_grant)
        self.history.append(self.state)
        return self.state

    @property
    def done(self) -> bool:
        return self.tick >= self.n_steps
