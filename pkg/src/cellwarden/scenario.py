"""Scenario files: parsing, serialization, and the seeded event-day suite.

A scenario is a small sectioned text file:

    [run]
    name = stadium-day
    start = 2025-06-02 00:00
    days = 1

    [sim]
    carrier_profile = sub6
    shadow_sigma_db = 1.0

    [events]
    id = match
    day = 0
    start = 14:00
    end = 14:20
    demand_multiplier = 4.2
    crowd_density_factor = 0.5

``[events]`` may repeat; every other section appears at most once. Unknown
sections or keys are rejected with a list of the offenders, never ignored.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass, field as dc_field, fields, replace
from pathlib import Path

import numpy as np

from .agent import PERSONAS, Persona, PolicyThresholds
from .feeds import FeedPanel, FeedService
from .simcore.config import (CarrierProfile, EventRecord, SimConfig,
                             TrafficModel, parse_tod_minutes)
from .simcore.weather import SyntheticWeather, WeatherSeries
from .simcore.world import CellWorld

WEATHER_SEED_CHANNEL = 21
STEPS_PER_DAY = 24 * 60


class ScenarioError(ValueError):
    """Malformed scenario text (syntax, unknown keys, bad values)."""


@dataclass(frozen=True)
class FeedSpec:
    """Feed panel shape carried by a scenario."""
    n_sources: int = 5
    corrupt_count: int = 1
    honest_bias_sigma: float = 0.02
    honest_noise_sigma: float = 0.05
    seed: int | None = None   # defaults to the sim seed

    def panel(self, default_seed: int) -> FeedPanel:
        return FeedPanel(n_sources=self.n_sources,
                         corrupt_count=self.corrupt_count,
                         honest_bias_sigma=self.honest_bias_sigma,
                         honest_noise_sigma=self.honest_noise_sigma,
                         seed=self.seed if self.seed is not None
                         else default_seed)


@dataclass
class Scenario:
    """Everything one run needs, resolved to concrete objects."""

    name: str = "scenario"
    start: dt.datetime = dt.datetime(2025, 6, 2, 0, 0)
    days: float = 1.0
    cfg: SimConfig = dc_field(default_factory=SimConfig)
    traffic: TrafficModel = dc_field(default_factory=TrafficModel)
    events: list[EventRecord] = dc_field(default_factory=list)
    weather_params: SyntheticWeather = dc_field(default_factory=SyntheticWeather)
    weather_csv: str | None = None
    persona_preset: str | None = "strategic"
    persona: Persona = dc_field(
        default_factory=lambda: PERSONAS["strategic"])
    thresholds: PolicyThresholds = dc_field(default_factory=PolicyThresholds)
    feeds: FeedSpec = dc_field(default_factory=FeedSpec)

    @property
    def n_steps(self) -> int:
        return int(round(self.days * STEPS_PER_DAY / self.cfg.step_minutes))

    def weather(self, extra_steps: int = 64) -> WeatherSeries:
        if self.weather_csv is not None:
            return WeatherSeries.read_csv(self.weather_csv)
        seq = np.random.SeedSequence([self.cfg.rng_seed, WEATHER_SEED_CHANNEL])
        return WeatherSeries.synthesize(self.weather_params, self.start,
                                        self.n_steps + extra_steps,
                                        self.cfg.step_minutes, seq)

    def build_world(self, seed: int | None = None,
                    weather: WeatherSeries | None = None) -> CellWorld:
        cfg = self.cfg if seed is None else replace(self.cfg, rng_seed=seed)
        return CellWorld(cfg=cfg, traffic=self.traffic, events=self.events,
                         weather=weather if weather is not None
                         else self.weather(),
                         start=self.start, n_steps=self.n_steps,
                         outage_threshold_db=self.thresholds.gamma1_db)

    def build_feed_service(self, seed: int | None = None,
                           weather: WeatherSeries | None = None,
                           horizon_pad: int = 30) -> FeedService:
        default_seed = seed if seed is not None else self.cfg.rng_seed
        return FeedService(panel=self.feeds.panel(default_seed),
                           events=self.events,
                           weather=weather if weather is not None
                           else self.weather(),
                           start=self.start, n_steps=self.n_steps,
                           step_minutes=self.cfg.step_minutes,
                           horizon_pad=horizon_pad)

    def to_text(self) -> str:
        return format_scenario(self)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


# ---------------------------------------------------------------------------
# parsing

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _cast_bool(text: str) -> bool:
    low = text.lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise ScenarioError(f"not a boolean: {text!r}")


def _cast_carrier(text: str) -> CarrierProfile:
    try:
        return CarrierProfile(text.lower())
    except ValueError:
        names = ", ".join(c.value for c in CarrierProfile)
        raise ScenarioError(f"carrier_profile must be one of {names}: {text!r}")


def _cast_window(text: str) -> tuple[str, str]:
    parts = text.split("-")
    if len(parts) != 2:
        raise ScenarioError(f"rain_window must look like HH:MM-HH:MM: {text!r}")
    for p in parts:
        parse_tod_minutes(p)
    return parts[0].strip(), parts[1].strip()


_CASTERS = {
    "float": float,
    "int": int,
    "bool": _cast_bool,
    "str": str,
    "CarrierProfile": _cast_carrier,
}


def _dataclass_casts(cls) -> dict[str, object]:
    casts = {}
    for f in fields(cls):
        base = f.type.split("|")[0].strip()
        if base.startswith("tuple"):
            casts[f.name] = _cast_window
        else:
            casts[f.name] = _CASTERS.get(base, str)
    return casts


_SIM_CASTS = _dataclass_casts(SimConfig)
_TRAFFIC_CASTS = _dataclass_casts(TrafficModel)
_WEATHER_CASTS = _dataclass_casts(SyntheticWeather)
_RUN_KEYS = {"name", "start", "days"}
_EVENT_KEYS = {"id", "day", "start", "end", "demand_multiplier",
               "crowd_density_factor", "location_tag"}
_PERSONA_KEYS = {"preset", "name", "threshold_margin_db", "forecast_weight",
                 "reward_weights"}
_POLICY_KEYS = {"gamma1_db", "gamma2_db", "gamma3_db", "gamma4_db"}
_FEED_KEYS = {"n_sources", "corrupt_count", "honest_bias_sigma",
              "honest_noise_sigma", "seed"}

_SECTION_KEYS = {
    "run": _RUN_KEYS,
    "sim": set(_SIM_CASTS),
    "traffic": set(_TRAFFIC_CASTS),
    "events": _EVENT_KEYS,
    "weather": {"csv"} | set(_WEATHER_CASTS),
    "persona": _PERSONA_KEYS,
    "policy": _POLICY_KEYS,
    "feeds": _FEED_KEYS,
}
_REPEATABLE = {"events"}


def _split_sections(text: str) -> list[tuple[str, dict[str, str], int]]:
    """Raw (section, key->value, first line number) triples, in file order."""
    sections: list[tuple[str, dict[str, str], int]] = []
    current: dict[str, str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            current = {}
            sections.append((name, current, lineno))
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected key = value: {raw!r}")
        if current is None:
            raise ScenarioError(f"line {lineno}: key outside any section")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in current:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        current[key] = value
    return sections


def _check_keys(sections) -> None:
    unknown = []
    seen: dict[str, int] = {}
    for name, body, lineno in sections:
        if name not in _SECTION_KEYS:
            unknown.append(f"[{name}] (line {lineno})")
            continue
        if name not in _REPEATABLE:
            if name in seen:
                raise ScenarioError(
                    f"line {lineno}: section [{name}] appears twice "
                    f"(first at line {seen[name]})")
            seen[name] = lineno
        for key in body:
            if key not in _SECTION_KEYS[name]:
                unknown.append(f"[{name}] {key}")
    if unknown:
        raise ScenarioError("unknown scenario keys: " + ", ".join(unknown))


def _build_from_casts(cls, casts: dict, body: dict[str, str], where: str):
    kwargs = {}
    for key, value in body.items():
        try:
            kwargs[key] = casts[key](value)
        except ScenarioError:
            raise
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"[{where}] {key}: {exc}") from exc
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[{where}]: {exc}") from exc


def _parse_start(text: str) -> dt.datetime:
    try:
        return dt.datetime.fromisoformat(text)
    except ValueError as exc:
        raise ScenarioError(f"[run] start: {exc}") from exc


def _resolve_event(body: dict[str, str], index: int,
                   start: dt.datetime) -> EventRecord:
    where = f"events #{index + 1}"
    for key in ("start", "end", "demand_multiplier"):
        if key not in body:
            raise ScenarioError(f"[{where}] missing required key {key!r}")
    try:
        day = int(body.get("day", "0"))
        start_tod = parse_tod_minutes(body["start"])
        end_tod = parse_tod_minutes(body["end"])
        mult = float(body["demand_multiplier"])
        density = float(body.get("crowd_density_factor", "0.0"))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[{where}]: {exc}") from exc
    date0 = dt.datetime.combine(start.date(), dt.time())
    ev_start = date0 + dt.timedelta(days=day, minutes=start_tod)
    ev_end = date0 + dt.timedelta(days=day, minutes=end_tod)
    if ev_end <= ev_start:
        ev_end += dt.timedelta(days=1)   # wraps past midnight
    try:
        return EventRecord(
            event_id=body.get("id", f"event-{index + 1}"),
            start=ev_start, end=ev_end, demand_multiplier=mult,
            crowd_density_factor=density,
            location_tag=body.get("location_tag", ""))
    except ValueError as exc:
        raise ScenarioError(f"[{where}]: {exc}") from exc


def _resolve_persona(body: dict[str, str]) -> tuple[str | None, Persona]:
    preset = body.get("preset")
    if preset is not None:
        extra = sorted(set(body) - {"preset"})
        if extra:
            raise ScenarioError(
                "persona preset excludes custom keys: " + ", ".join(extra))
        if preset not in PERSONAS:
            raise ScenarioError(
                f"unknown persona preset {preset!r}; "
                f"choose from {', '.join(sorted(PERSONAS))}")
        return preset, PERSONAS[preset]
    try:
        weights = tuple(float(w) for w in
                        body.get("reward_weights", "1,1,1,1").split(","))
        persona = Persona(
            name=body.get("name", "CustomPersona"),
            threshold_margin_db=float(body.get("threshold_margin_db", "0")),
            forecast_weight=float(body.get("forecast_weight", "0.5")),
            reward_weights=weights)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[persona]: {exc}") from exc
    return None, persona


def parse_scenario(text: str, base_dir: str | Path | None = None) -> Scenario:
    sections = _split_sections(text)
    _check_keys(sections)
    bodies = {name: body for name, body, _ in sections
              if name not in _REPEATABLE}

    run = bodies.get("run", {})
    try:
        days = float(run.get("days", "1"))
    except ValueError as exc:
        raise ScenarioError(f"[run] days: {exc}") from exc
    if days <= 0:
        raise ScenarioError(f"[run] days must be positive: {days}")
    start = _parse_start(run["start"]) if "start" in run else \
        dt.datetime(2025, 6, 2, 0, 0)

    cfg = _build_from_casts(SimConfig, _SIM_CASTS, bodies.get("sim", {}), "sim")
    traffic = _build_from_casts(TrafficModel, _TRAFFIC_CASTS,
                                bodies.get("traffic", {}), "traffic")

    weather_body = dict(bodies.get("weather", {}))
    weather_csv = weather_body.pop("csv", None)
    if weather_csv is not None and weather_body:
        raise ScenarioError(
            "[weather] csv excludes synthetic keys: "
            + ", ".join(sorted(weather_body)))
    if weather_csv is not None and base_dir is not None:
        weather_csv = str(Path(base_dir) / weather_csv)
    weather_params = _build_from_casts(SyntheticWeather, _WEATHER_CASTS,
                                       weather_body, "weather")

    preset, persona = (_resolve_persona(bodies["persona"])
                       if "persona" in bodies else ("strategic",
                                                    PERSONAS["strategic"]))
    thresholds = _build_from_casts(
        PolicyThresholds,
        {k: float for k in _POLICY_KEYS},
        bodies.get("policy", {}), "policy")
    feed_casts = {"n_sources": int, "corrupt_count": int,
                  "honest_bias_sigma": float, "honest_noise_sigma": float,
                  "seed": int}
    feeds = _build_from_casts(FeedSpec, feed_casts,
                              bodies.get("feeds", {}), "feeds")

    events = [_resolve_event(body, i, start)
              for i, (name, body, _) in enumerate(
                  s for s in sections if s[0] == "events")]
    events.sort(key=lambda ev: (ev.start, ev.event_id))

    return Scenario(name=run.get("name", "scenario"), start=start, days=days,
                    cfg=cfg, traffic=traffic, events=events,
                    weather_params=weather_params, weather_csv=weather_csv,
                    persona_preset=preset, persona=persona,
                    thresholds=thresholds, feeds=feeds)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text, base_dir=path.parent)


# ---------------------------------------------------------------------------
# serialization

def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, CarrierProfile):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _section_lines(title: str, obj, defaults, names) -> list[str]:
    """One section, only the fields that differ from defaults."""
    lines = []
    for name in names:
        value = getattr(obj, name)
        if value != getattr(defaults, name):
            if name == "rain_window":
                value = f"{value[0]}-{value[1]}"
            lines.append(f"{name} = {_fmt_value(value)}")
    if not lines:
        return []
    return [f"[{title}]"] + lines + [""]


def format_scenario(scn: Scenario) -> str:
    out = [
        "[run]",
        f"name = {scn.name}",
        f"start = {scn.start.isoformat(sep=' ', timespec='minutes')}",
        f"days = {_fmt_value(scn.days)}",
        "",
    ]
    out += _section_lines("sim", scn.cfg, SimConfig(),
                          [f.name for f in fields(SimConfig)])
    out += _section_lines("traffic", scn.traffic, TrafficModel(),
                          [f.name for f in fields(TrafficModel)])
    if scn.weather_csv is not None:
        out += ["[weather]", f"csv = {scn.weather_csv}", ""]
    else:
        out += _section_lines("weather", scn.weather_params,
                              SyntheticWeather(),
                              [f.name for f in fields(SyntheticWeather)])
    if scn.persona_preset is not None:
        out += ["[persona]", f"preset = {scn.persona_preset}", ""]
    else:
        p = scn.persona
        weights = ",".join(repr(w) for w in p.reward_weights)
        out += ["[persona]", f"name = {p.name}",
                f"threshold_margin_db = {_fmt_value(p.threshold_margin_db)}",
                f"forecast_weight = {_fmt_value(p.forecast_weight)}",
                f"reward_weights = {weights}", ""]
    out += _section_lines("policy", scn.thresholds, PolicyThresholds(),
                          sorted(_POLICY_KEYS))
    default_feeds = FeedSpec()
    feed_lines = []
    for f in fields(FeedSpec):
        value = getattr(scn.feeds, f.name)
        if value != getattr(default_feeds, f.name) and value is not None:
            feed_lines.append(f"{f.name} = {_fmt_value(value)}")
    if feed_lines:
        out += ["[feeds]"] + feed_lines + [""]

    date0 = scn.start.date()
    for ev in scn.events:
        day = (ev.start.date() - date0).days
        out += [
            "[events]",
            f"id = {ev.event_id}",
            f"day = {day}",
            f"start = {ev.start.strftime('%H:%M')}",
            f"end = {ev.end.strftime('%H:%M')}",
            f"demand_multiplier = {_fmt_value(ev.demand_multiplier)}",
            f"crowd_density_factor = {_fmt_value(ev.crowd_density_factor)}",
        ]
        if ev.location_tag:
            out.append(f"location_tag = {ev.location_tag}")
        out.append("")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# seeded generators

SUITE_NOISE = dict(shadow_sigma_db=1.0, fast_fading_sigma_db=0.4,
                   interference_noise_sigma_db=0.5)
_BIZ_WINDOW = ("09:30", "16:30")
_EVE_WINDOW = ("17:30", "22:30")
_TAGS = ("stadium", "plaza", "arena", "expo", "transit-hub")


def _place_pulses(rng: np.random.Generator, window: tuple[str, str],
                  n_ev: int) -> list[tuple[int, int]]:
    """Non-overlapping (start_tod, end_tod) pulses inside one window."""
    lo = parse_tod_minutes(window[0])
    hi = parse_tod_minutes(window[1])
    durs = rng.integers(15, 26, size=n_ev)
    gaps = rng.integers(8, 21, size=n_ev)   # gaps[0] offsets the window start
    room = hi - lo
    slack = room - int(durs.sum())
    if slack < 0:
        raise ValueError(f"window {window} cannot hold {n_ev} events")
    if gaps.sum() > slack:
        gaps = np.maximum((gaps * (slack / gaps.sum())).astype(int), 1)
    pulses = []
    t = lo
    for dur, gap in zip(durs, gaps):
        t += int(gap)
        pulses.append((t, t + int(dur)))
        t += int(dur)
    if t > hi:
        raise ValueError(f"window {window} overflow at {t}")
    return pulses


def _severity(rng: np.random.Generator) -> float:
    """Demand multiplier in (1.5, 5], skewed toward the severe end."""
    u = float(rng.uniform())
    return 5.0 - 3.5 * u * u


def _suite_day(rng: np.random.Generator, index: int, date: dt.date,
               mmwave: bool) -> Scenario:
    day_seed = int(rng.integers(1, 2 ** 31 - 1))
    n_biz = int(rng.integers(7, 9))
    n_eve = int(rng.integers(5, 7))
    events = []
    start = dt.datetime.combine(date, dt.time())
    for w_idx, (window, count) in enumerate(
            ((_BIZ_WINDOW, n_biz), (_EVE_WINDOW, n_eve))):
        pulses = _place_pulses(rng, window, count)
        for e_idx, (tod0, tod1) in enumerate(pulses):
            mult = round(_severity(rng), 3)
            if mmwave:
                density = 0.0
            elif w_idx == 0:
                density = round(float(rng.uniform(0.45, 0.6)), 3)
            else:
                density = round(float(rng.uniform(0.85, 1.0)), 3)
            events.append(EventRecord(
                event_id=f"d{index:02d}-w{w_idx}e{e_idx:02d}",
                start=start + dt.timedelta(minutes=tod0),
                end=start + dt.timedelta(minutes=tod1),
                demand_multiplier=mult, crowd_density_factor=density,
                location_tag=_TAGS[(index + e_idx) % len(_TAGS)]))
    if mmwave:
        weather = SyntheticWeather(
            foliage_db=round(float(rng.uniform(2.0, 2.8)), 2),
            rain_events_per_day=1.0,
            rain_peak_mm_per_h=round(float(rng.uniform(8.0, 18.0)), 2),
            rain_duration_min_mean=40.0,
            rain_window=("00:30", "04:00"),
            humidity_base_pct=50.0, humidity_swing_pct=15.0)
        carrier = CarrierProfile.MMWAVE
    else:
        weather = SyntheticWeather()
        carrier = CarrierProfile.SUB6
    cfg = SimConfig(carrier_profile=carrier, rng_seed=day_seed, **SUITE_NOISE)
    return Scenario(name=f"event-day-{index:02d}", start=start, days=1.0,
                    cfg=cfg, events=events, weather_params=weather,
                    feeds=FeedSpec())


def build_suite(seed: int = 7, n_days: int = 15) -> list[Scenario]:
    """The event-day comparison suite: diverse pulsed stress, mixed carriers.

    Five of fifteen days run on the millimeter-wave profile, where weather
    dominates and crowds are kept off the direct path (blockage on that
    carrier is unpreventable by power control alone, which would say nothing
    about any controller).
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    n_mm = max(1, round(n_days / 3))
    mm_days = set(int(i) for i in rng.choice(n_days, size=n_mm, replace=False))
    base = dt.date(2025, 6, 2)
    return [_suite_day(rng, d, base + dt.timedelta(days=d), d in mm_days)
            for d in range(n_days)]


def default_training_scenario(days: int = 12, seed: int = 1) -> Scenario:
    """Multi-day corpus scenario with the suite's event texture, Sub6."""
    if days < 1:
        raise ValueError(f"days must be >= 1: {days}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 6]))
    base = dt.date(2025, 3, 3)
    events = []
    for d in range(days):
        start = dt.datetime.combine(base + dt.timedelta(days=d), dt.time())
        n_biz = int(rng.integers(7, 9))
        n_eve = int(rng.integers(5, 7))
        for w_idx, (window, count) in enumerate(
                ((_BIZ_WINDOW, n_biz), (_EVE_WINDOW, n_eve))):
            for e_idx, (tod0, tod1) in enumerate(
                    _place_pulses(rng, window, count)):
                events.append(EventRecord(
                    event_id=f"c{d:02d}-w{w_idx}e{e_idx:02d}",
                    start=start + dt.timedelta(minutes=tod0),
                    end=start + dt.timedelta(minutes=tod1),
                    demand_multiplier=round(_severity(rng), 3),
                    crowd_density_factor=round(float(rng.uniform(0.3, 0.9)), 3),
                    location_tag=_TAGS[e_idx % len(_TAGS)]))
    cfg = SimConfig(rng_seed=seed, **SUITE_NOISE)
    return Scenario(name=f"training-corpus-{days}d",
                    start=dt.datetime.combine(base, dt.time()),
                    days=float(days), cfg=cfg, events=events,
                    weather_params=SyntheticWeather())
