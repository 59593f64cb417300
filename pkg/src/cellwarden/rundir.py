"""Run-directory persistence: manifests, artifact layout, execution, replay.

Every command invocation gets a fresh directory under the output root with
fixed artifact names (manifest.json, metrics.csv, traces.log, report.txt), so
nothing ever mutates an earlier run. The manifest embeds the full scenario
text and the model archive digest, which is enough to replay the run and
compare logs byte for byte.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .agent import PERSONAS, Persona, TraceLog, control_loop
from .baselines import run_fixed, run_reactive
from .forecaster.backend import BACKEND_NAME
from .forecaster.features import ContextSource
from .forecaster.forecast import ForecastEngine
from .kpi import KpiReport, format_report
from .scenario import Scenario, parse_scenario
from .simcore.world import RunLog

MANIFEST_NAME = "manifest.json"
METRICS_NAME = "metrics.csv"
TRACES_NAME = "traces.log"
REPORT_NAME = "report.txt"
MODEL_NAME = "model.archive"
MANIFEST_FORMAT = 1

CONTROLLERS = ("fixed", "reactive", "proactive")

REFRESH_EVERY = 5
HORIZON_STEPS = 30


def parse_controller(spec: str) -> tuple[str, str | None]:
    """'fixed' | 'reactive' | 'proactive[:persona]' -> (kind, persona key)."""
    kind, _, persona = spec.partition(":")
    kind = kind.strip().lower()
    if kind not in CONTROLLERS:
        raise ValueError(
            f"unknown controller {spec!r}; expected one of {CONTROLLERS}")
    if persona and kind != "proactive":
        raise ValueError(f"only proactive takes a persona: {spec!r}")
    if kind == "proactive" and persona and persona not in PERSONAS:
        raise ValueError(
            f"unknown persona {persona!r}; choose from "
            f"{', '.join(sorted(PERSONAS))}")
    return kind, (persona or None)


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    run_id: str
    command: str
    controller: str
    persona: str
    seed: int | None
    scenario_name: str
    scenario_text: str
    model_archive: str | None
    model_sha256: str | None
    backend: str
    started: str
    finished: str
    format_version: int = MANIFEST_FORMAT
    package_version: str = __version__
    artifacts: dict | None = None

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = sorted(set(raw) - known)
        if extra:
            raise ValueError(f"manifest {path} has unknown fields: {extra}")
        return cls(**raw)


def allocate_run_dir(out_root: str | Path, stem: str) -> Path:
    """Next free ``<stem>-NNN`` directory under the root (append-only)."""
    root = Path(out_root)
    root.mkdir(parents=True, exist_ok=True)
    stem = re.sub(r"[^A-Za-z0-9._:-]+", "-", stem)
    taken = {p.name for p in root.iterdir() if p.is_dir()}
    for n in range(1000):
        name = f"{stem}-{n:03d}"
        if name not in taken:
            path = root / name
            path.mkdir()
            return path
    raise RuntimeError(f"no free run directory for {stem} under {root}")


@dataclass
class RunResult:
    run_id: str
    log: RunLog
    traces: TraceLog
    kpi: KpiReport
    persona_name: str


def execute_controller(scenario: Scenario, kind: str,
                       persona_key: str | None = None,
                       model_path: str | Path | None = None,
                       run_id: str = "run",
                       refresh_every: int = REFRESH_EVERY,
                       horizon: int = HORIZON_STEPS) -> RunResult:
    """Run one controller over one scenario and score the log."""
    weather = scenario.weather()
    world = scenario.build_world(weather=weather)
    traces = TraceLog()
    if kind == "fixed":
        log = run_fixed(world, scenario.n_steps, scenario.thresholds)
        persona_name = "FixedPower"
    elif kind == "reactive":
        log = run_reactive(world, scenario.n_steps, scenario.thresholds,
                           trace_log=traces)
        persona_name = "ReactiveAgent"
    elif kind == "proactive":
        if model_path is None:
            raise ValueError("proactive controller requires a model archive")
        persona: Persona = (PERSONAS[persona_key] if persona_key
                            else scenario.persona)
        service = scenario.build_feed_service(weather=weather,
                                              horizon_pad=horizon)
        context = ContextSource.from_signals(service.all_signals())
        engine = ForecastEngine.load(model_path, context=context)
        log = control_loop(world, engine, service, persona, scenario.n_steps,
                           scenario.thresholds, refresh_every=refresh_every,
                           horizon=horizon, trace_log=traces)
        persona_name = persona.name
    else:
        raise ValueError(f"unknown controller kind {kind!r}")
    kpi = KpiReport.from_log(run_id, log)
    return RunResult(run_id=run_id, log=log, traces=traces, kpi=kpi,
                     persona_name=persona_name)


def persist_run(run_dir: Path, result: RunResult, scenario: Scenario,
                kind: str, command: str, seed: int | None,
                model_path: str | Path | None,
                started: dt.datetime, finished: dt.datetime) -> RunManifest:
    metrics = run_dir / METRICS_NAME
    traces = run_dir / TRACES_NAME
    report = run_dir / REPORT_NAME
    result.log.write_csv(metrics)
    result.traces.write(traces)
    report.write_text(format_report(result.kpi))
    manifest = RunManifest(
        run_id=result.run_id,
        command=command,
        controller=kind,
        persona=result.persona_name,
        seed=seed,
        scenario_name=scenario.name,
        scenario_text=scenario.to_text(),
        model_archive=str(model_path) if model_path is not None else None,
        model_sha256=(file_sha256(model_path)
                      if model_path is not None else None),
        backend=BACKEND_NAME,
        started=started.isoformat(timespec="seconds"),
        finished=finished.isoformat(timespec="seconds"),
        artifacts={"manifest": MANIFEST_NAME, "metrics": METRICS_NAME,
                   "traces": TRACES_NAME, "report": REPORT_NAME},
    )
    manifest.write(run_dir / MANIFEST_NAME)
    return manifest


def run_and_persist(scenario: Scenario, kind: str, out_root: str | Path,
                    command: str, persona_key: str | None = None,
                    model_path: str | Path | None = None,
                    seed: int | None = None) -> tuple[Path, RunResult]:
    """The full cmd-run path: execute, allocate a directory, persist."""
    if seed is not None:
        scenario = dataclasses.replace(
            scenario, cfg=dataclasses.replace(scenario.cfg, rng_seed=seed))
    label = kind if persona_key is None else f"{kind}-{persona_key}"
    started = dt.datetime.now()
    run_dir = allocate_run_dir(out_root, f"{scenario.name}-{label}")
    result = execute_controller(scenario, kind, persona_key=persona_key,
                                model_path=model_path, run_id=run_dir.name)
    finished = dt.datetime.now()
    persist_run(run_dir, result, scenario, kind, command, seed, model_path,
                started, finished)
    return run_dir, result


def replay_run(run_dir: str | Path, out_root: str | Path,
               command: str = "replay") -> tuple[Path, bool]:
    """Re-execute a persisted run from its manifest alone.

    Returns the new run directory and whether the replayed metrics.csv is
    byte-identical to the original.
    """
    run_dir = Path(run_dir)
    manifest = RunManifest.read(run_dir / MANIFEST_NAME)
    scenario = parse_scenario(manifest.scenario_text)
    model_path = manifest.model_archive
    if model_path is not None:
        if not Path(model_path).exists():
            raise FileNotFoundError(
                f"model archive {model_path} referenced by the manifest "
                f"is gone")
        digest = file_sha256(model_path)
        if digest != manifest.model_sha256:
            raise ValueError(
                f"model archive {model_path} changed since the original run "
                f"(sha256 {digest[:12]}… != {manifest.model_sha256[:12]}…)")
    kind = manifest.controller
    persona_key = _persona_key_for(manifest.persona)
    started = dt.datetime.now()
    new_dir = allocate_run_dir(out_root, f"replay-{manifest.run_id}")
    result = execute_controller(scenario, kind, persona_key=persona_key,
                                model_path=model_path, run_id=new_dir.name)
    finished = dt.datetime.now()
    persist_run(new_dir, result, scenario, kind, command, manifest.seed,
                model_path, started, finished)
    original = (run_dir / METRICS_NAME).read_bytes()
    replayed = (new_dir / METRICS_NAME).read_bytes()
    return new_dir, original == replayed


def _persona_key_for(persona_name: str) -> str | None:
    for key, persona in PERSONAS.items():
        if persona.name == persona_name:
            return key
    return None
