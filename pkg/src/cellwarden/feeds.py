"""Mock external-intelligence feeds and the multi-source validator.

Each feed source wraps a ground-truth series (event demand, rain rate,
crowd flow) with its own bias and noise; some sources are corrupt and emit
arbitrary outliers. The validator cross-checks all sources for one signal
at one timestamp with a robust median rule before anything reaches the
forecaster or the agent. A live API adapter could replace the generators
without touching the validator.
"""

from __future__ import annotations

import datetime as dt
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAD_MULTIPLIER = 3.0
EXACT_MATCH_TOL = 1e-9  # fallback tolerance when MAD collapses to zero
OUTLIER_RANGE_MULTIPLE = 10.0

# Consensus demand below this reads as "no event". Honest-source noise
# hovers around the quiet baseline of 1.0 and must not fabricate events.
DEMAND_EVENT_FLOOR = 1.25


class SignalKind(enum.Enum):
    EVENT_DEMAND = "EventDemand"
    RAIN_RATE = "RainRate"
    CROWD_FLOW = "CrowdFlow"


# plausible spans per signal, used to size corrupt-source outliers
SIGNAL_RANGE = {
    SignalKind.EVENT_DEMAND: 4.0,   # demand multiplier 1..5
    SignalKind.RAIN_RATE: 50.0,     # mm/h
    SignalKind.CROWD_FLOW: 1.0,     # density fraction
}


@dataclass(frozen=True)
class NoiseProfile:
    """How one source distorts ground truth.

    ``outlier_rate`` is the per-report probability of replacing the value
    with a far-out excursion of ``OUTLIER_RANGE_MULTIPLE`` times the signal
    range; 1.0 makes the source fully corrupt.
    """
    bias: float = 0.0
    noise_sigma: float = 0.0
    outlier_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise ValueError(f"outlier_rate must be in [0, 1]: {self.outlier_rate}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0: {self.noise_sigma}")


IDENTITY_PROFILE = NoiseProfile()


@dataclass(frozen=True)
class SourceReport:
    source_id: str
    signal_kind: SignalKind
    timestamp: dt.datetime
    value: float
    reliability_prior: float = 0.9

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"report value must be finite: {self.value}")
        if not 0.0 < self.reliability_prior <= 1.0:
            raise ValueError(
                f"reliability_prior must be in (0, 1]: {self.reliability_prior}")


@dataclass(frozen=True)
class ValidatedSignal:
    signal_kind: SignalKind
    timestamp: dt.datetime
    consensus_value: float
    confidence: float
    rejected_sources: tuple[str, ...] = ()


def generate_feed(kind: SignalKind, timestamps: Sequence[dt.datetime],
                  truth: Sequence[float], source_id: str,
                  profile: NoiseProfile = IDENTITY_PROFILE,
                  reliability_prior: float = 0.9,
                  rng: np.random.Generator | None = None) -> list[SourceReport]:
    """One source's view of a ground-truth series."""
    if len(timestamps) != len(truth):
        raise ValueError("timestamps and truth lengths differ")
    if rng is None:
        rng = np.random.default_rng(0)
    span = SIGNAL_RANGE[kind]
    reports = []
    for t, x in zip(timestamps, truth):
        value = x + profile.bias
        if profile.noise_sigma > 0:
            value += profile.noise_sigma * float(rng.standard_normal())
        if profile.outlier_rate > 0 and float(rng.uniform()) < profile.outlier_rate:
            sign = 1.0 if float(rng.uniform()) < 0.5 else -1.0
            value = x + sign * OUTLIER_RANGE_MULTIPLE * span
        reports.append(SourceReport(source_id=source_id, signal_kind=kind,
                                    timestamp=t, value=float(value),
                                    reliability_prior=reliability_prior))
    return reports


def validate(reports: Sequence[SourceReport]) -> ValidatedSignal:
    """Robust consensus over same-signal, same-instant reports.

    Sources farther than three median-absolute-deviations from the overall
    median are rejected; consensus is the median of what survives. With up
    to floor((N-1)/2) corrupt sources the consensus stays inside the honest
    noise envelope.
    """
    if not reports:
        raise ValueError("no sources")
    kind = reports[0].signal_kind
    t = reports[0].timestamp
    for r in reports[1:]:
        if r.signal_kind is not kind or r.timestamp != t:
            raise ValueError("validate expects reports for one (kind, timestamp)")
    values = np.array([r.value for r in reports])
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med)))
    cutoff = MAD_MULTIPLIER * mad if mad > 0 else EXACT_MATCH_TOL
    keep = np.abs(values - med) <= cutoff
    rejected = tuple(sorted(r.source_id for r, k in zip(reports, keep) if not k))
    n_keep = int(keep.sum())
    consensus = float(np.median(values[keep])) if n_keep else float("nan")
    return ValidatedSignal(signal_kind=kind, timestamp=t,
                           consensus_value=consensus,
                           confidence=n_keep / len(reports),
                           rejected_sources=rejected)


def validate_series(feeds: Sequence[Sequence[SourceReport]]) -> list[ValidatedSignal]:
    """Validate several sources tick by tick. All feeds must align."""
    if not feeds:
        raise ValueError("no sources")
    n = len(feeds[0])
    if any(len(f) != n for f in feeds):
        raise ValueError("feed lengths differ")
    return [validate([f[i] for f in feeds]) for i in range(n)]


@dataclass
class FeedPanel:
    """A bundle of per-kind sources used by a run.

    ``corrupt_count`` of the ``n_sources`` sources per kind emit constant
    outliers; the rest carry small independent bias and noise.
    """
    n_sources: int = 5
    corrupt_count: int = 0
    honest_bias_sigma: float = 0.02
    honest_noise_sigma: float = 0.05
    seed: int = 0
    profiles: dict[SignalKind, list[tuple[str, NoiseProfile]]] = field(
        default_factory=dict)

    def __post_init__(self):
        if self.corrupt_count >= self.n_sources:
            raise ValueError("at least one honest source is required")
        if self.profiles:
            return
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 97]))
        for kind in SignalKind:
            span = SIGNAL_RANGE[kind]
            panel = []
            for i in range(self.n_sources):
                sid = f"{kind.value.lower()}-{i}"
                if i < self.n_sources - self.corrupt_count:
                    prof = NoiseProfile(
                        bias=float(rng.normal(0.0, self.honest_bias_sigma)) * span,
                        noise_sigma=self.honest_noise_sigma * span,
                        outlier_rate=0.0)
                else:
                    prof = NoiseProfile(outlier_rate=1.0)
                panel.append((sid, prof))
            self.profiles[kind] = panel

    def observe(self, kind: SignalKind, timestamps: Sequence[dt.datetime],
                truth: Sequence[float]) -> list[list[SourceReport]]:
        feeds = []
        for i, (sid, prof) in enumerate(self.profiles[kind]):
            rng = np.random.default_rng(
                np.random.SeedSequence([self.seed, 11, _kind_index(kind), i]))
            feeds.append(generate_feed(kind, timestamps, truth, sid, prof,
                                       rng=rng))
        return feeds

    def validated(self, kind: SignalKind, timestamps: Sequence[dt.datetime],
                  truth: Sequence[float]) -> list[ValidatedSignal]:
        return validate_series(self.observe(kind, timestamps, truth))


def _kind_index(kind: SignalKind) -> int:
    return list(SignalKind).index(kind)


class FeedService:
    """Validated signals for a whole run, pregenerated and keyed by instant.

    Every source draws its noise over the full span once, at construction,
    so a timestamp's consensus never depends on which refresh window asked
    for it. Replays that rebuild the service from the same scenario and seed
    see identical feeds.
    """

    def __init__(self, panel: FeedPanel, events, weather, start: dt.datetime,
                 n_steps: int, step_minutes: int = 1, horizon_pad: int = 30):
        if n_steps < 1:
            raise ValueError(f"n_steps must be positive: {n_steps}")
        self.panel = panel
        self.step_minutes = step_minutes
        step = dt.timedelta(minutes=step_minutes)
        # one step of pre-roll so the instant before the first action is covered
        self._times = [start + (k - 1) * step
                       for k in range(n_steps + horizon_pad + 2)]
        self._truth = {
            SignalKind.EVENT_DEMAND: [self._demand_truth(t, events)
                                      for t in self._times],
            SignalKind.CROWD_FLOW: [self._crowd_truth(t, events)
                                    for t in self._times],
            SignalKind.RAIN_RATE: [self._rain_truth(t, weather)
                                   for t in self._times],
        }
        self._by_key: dict[tuple[SignalKind, dt.datetime], ValidatedSignal] = {}
        for kind in SignalKind:
            series = panel.validated(kind, self._times, self._truth[kind])
            for sig in series:
                self._by_key[(kind, sig.timestamp)] = sig

    @staticmethod
    def _demand_truth(t: dt.datetime, events) -> float:
        active = [ev.demand_multiplier for ev in events if ev.active_at(t)]
        return max(active) if active else 1.0

    @staticmethod
    def _crowd_truth(t: dt.datetime, events) -> float:
        active = [ev.crowd_density_factor for ev in events if ev.active_at(t)]
        return max(active) if active else 0.0

    @staticmethod
    def _rain_truth(t: dt.datetime, weather) -> float:
        if weather is None:
            return 0.0
        try:
            return weather.at(t).rain_mm_per_h
        except KeyError:
            return 0.0

    def signal_at(self, kind: SignalKind,
                  t: dt.datetime) -> ValidatedSignal | None:
        return self._by_key.get((kind, t))

    def signals_between(self, t0: dt.datetime,
                        horizon_steps: int) -> list[ValidatedSignal]:
        """All kinds over ``t0 .. t0 + horizon_steps`` inclusive, in time order."""
        step = dt.timedelta(minutes=self.step_minutes)
        out = []
        for k in range(horizon_steps + 1):
            t = t0 + k * step
            for kind in SignalKind:
                sig = self._by_key.get((kind, t))
                if sig is not None:
                    out.append(sig)
        return out

    def all_signals(self) -> list[ValidatedSignal]:
        """Every validated signal over the pregenerated span, in time order."""
        return [self._by_key[(kind, t)] for t in self._times
                for kind in SignalKind]

    def reports(self, kind: SignalKind) -> list[list[SourceReport]]:
        """Regenerate the raw per-source reports (deterministic)."""
        return self.panel.observe(kind, self._times, self._truth[kind])


def write_feed_jsonl(reports: Iterable[SourceReport], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in reports:
            fh.write(json.dumps({
                "source_id": r.source_id,
                "kind": r.signal_kind.value,
                "timestamp": r.timestamp.isoformat(timespec="minutes"),
                "value": r.value,
                "reliability_prior": r.reliability_prior,
            }, sort_keys=True) + "\n")


def read_feed_jsonl(path: str | Path) -> list[SourceReport]:
    kinds = {k.value: k for k in SignalKind}
    reports = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            reports.append(SourceReport(
                source_id=rec["source_id"],
                signal_kind=kinds[rec["kind"]],
                timestamp=dt.datetime.fromisoformat(rec["timestamp"]),
                value=float(rec["value"]),
                reliability_prior=float(rec["reliability_prior"]),
            ))
    return reports
