"""Command-line orchestration: generate, train, run, compare, replay, report."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import run_fixed
from .forecaster.backend import BACKEND_NAME
from .forecaster.features import ContextSource, build_dataset
from .forecaster.forecast import ForecastEngine, accuracy
from .forecaster.model import LstmModel, TrainConfig
from .forecaster.train import predict_dataset, train
from .kpi import (KpiReport, aggregate, cov, format_report,
                  write_aggregate_csv)
from .rundir import (METRICS_NAME, MODEL_NAME, RunManifest, allocate_run_dir,
                     file_sha256, parse_controller, replay_run,
                     run_and_persist)
from .scenario import (Scenario, ScenarioError, build_suite,
                       default_training_scenario, load_scenario)
from .simcore.world import RunLog

SCENARIO_SNAPSHOT = "scenario.scn"
HISTORY_NAME = "history.csv"
COMPARISON_NAME = "comparison.csv"


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_or_default(args) -> Scenario:
    if args.config is not None:
        scenario = load_scenario(args.config)
    else:
        scenario = default_training_scenario(
            days=args.days if getattr(args, "days", None) else 12,
            seed=args.seed if args.seed is not None else 1)
    if getattr(args, "days", None):
        scenario = dataclasses.replace(scenario, days=float(args.days))
    if args.seed is not None:
        scenario = dataclasses.replace(
            scenario, cfg=dataclasses.replace(scenario.cfg,
                                              rng_seed=args.seed))
    return scenario


def cmd_generate(args) -> int:
    scenario = _load_or_default(args)
    out_dir = allocate_run_dir(args.out, f"corpus-{scenario.name}")
    world = scenario.build_world()
    log = run_fixed(world, scenario.n_steps, scenario.thresholds)
    log.write_csv(out_dir / METRICS_NAME)
    scenario.write(out_dir / SCENARIO_SNAPSHOT)
    manifest = RunManifest(
        run_id=out_dir.name, command=" ".join(sys.argv),
        controller="generate", persona="FixedPower", seed=args.seed,
        scenario_name=scenario.name, scenario_text=scenario.to_text(),
        model_archive=None, model_sha256=None, backend="-",
        started=dt.datetime.now().isoformat(timespec="seconds"),
        finished=dt.datetime.now().isoformat(timespec="seconds"),
        artifacts={"metrics": METRICS_NAME, "scenario": SCENARIO_SNAPSHOT})
    manifest.write(out_dir / "manifest.json")
    _say(args, f"corpus: {out_dir} ({len(log)} rows)")
    return 0


def cmd_train(args) -> int:
    corpus = Path(args.corpus if args.corpus else (args.config or ""))
    if not corpus.is_dir():
        raise ScenarioError(f"corpus directory not found: {corpus}")
    scenario = load_scenario(corpus / SCENARIO_SNAPSHOT)
    log = RunLog.read_csv(corpus / METRICS_NAME)
    weather = scenario.weather()
    context = ContextSource.from_scenario(scenario.events, weather)
    dataset = build_dataset(log.timestamps(), log.loads(), context,
                            window=args.window, horizon=1,
                            val_fraction=args.val_fraction,
                            step_minutes=scenario.cfg.step_minutes)
    seed = args.seed if args.seed is not None else 0
    model = LstmModel(hidden1=args.hidden1, hidden2=args.hidden2, seed=seed)
    cfg = TrainConfig(epochs_max=args.epochs, seed=seed,
                      validation_split=args.val_fraction)
    history = train(model, dataset, cfg, quiet=args.quiet)

    val_idx = dataset.val_indices()
    predicted = predict_dataset(model, dataset, val_idx)
    val_accuracy = accuracy(predicted, dataset.targets(val_idx))

    out_dir = allocate_run_dir(args.out, f"train-{scenario.name}")
    engine = ForecastEngine(model, context, history.residual_sigma,
                            window=args.window,
                            step_minutes=scenario.cfg.step_minutes)
    model_path = out_dir / MODEL_NAME
    engine.save(model_path, extra_meta={"corpus": str(corpus),
                                        "val_accuracy_pct": val_accuracy})
    history.write_csv(out_dir / HISTORY_NAME)
    manifest = RunManifest(
        run_id=out_dir.name, command=" ".join(sys.argv), controller="train",
        persona="-", seed=seed, scenario_name=scenario.name,
        scenario_text=scenario.to_text(), model_archive=str(model_path),
        model_sha256=file_sha256(model_path),
        backend=BACKEND_NAME, started="-", finished="-",
        artifacts={"model": MODEL_NAME, "history": HISTORY_NAME,
                   "val_accuracy_pct": val_accuracy,
                   "best_epoch": history.best_epoch,
                   "stopped": history.stopped_reason})
    manifest.write(out_dir / "manifest.json")
    _say(args, f"model: {model_path}")
    _say(args, f"best epoch {history.best_epoch} ({history.stopped_reason}); "
               f"validation accuracy {val_accuracy:.2f}%")
    return 0


def cmd_run(args) -> int:
    if args.config is None:
        raise ScenarioError("run requires --config <scenario file>")
    kind, persona_key = parse_controller(args.controller)
    if kind == "proactive" and args.model is None:
        raise ScenarioError("proactive controller requires --model <archive>")
    scenario = load_scenario(args.config)
    run_dir, result = run_and_persist(
        scenario, kind, args.out, " ".join(sys.argv),
        persona_key=persona_key, model_path=args.model, seed=args.seed)
    _say(args, f"run: {run_dir}")
    _say(args, format_report(result.kpi).rstrip())
    return 0


def cmd_compare(args) -> int:
    if args.model is None:
        raise ScenarioError("compare requires --model <archive>")
    seed = args.seed if args.seed is not None else 7
    suite = build_suite(seed=seed, n_days=args.days)
    compare_dir = allocate_run_dir(args.out, f"compare-s{seed}")
    scen_dir = compare_dir / "scenarios"
    scen_dir.mkdir()
    runs_root = compare_dir / "runs"

    controllers = ("fixed", "reactive", "proactive")
    day_kpis: dict[str, list[KpiReport]] = {c: [] for c in controllers}
    rows = []
    for day_idx, scenario in enumerate(suite):
        scenario.write(scen_dir / f"{scenario.name}.scn")
        for kind in controllers:
            model = args.model if kind == "proactive" else None
            try:
                run_dir, result = run_and_persist(
                    scenario, kind, runs_root, " ".join(sys.argv),
                    model_path=model)
            except Exception as exc:
                raise RuntimeError(
                    f"comparison aborted: run "
                    f"{scenario.name}-{kind} failed: {exc}") from exc
            day_kpis[kind].append(result.kpi)
            rows.append([scenario.name, kind, result.run_id,
                         result.kpi.outage_rate_pct,
                         result.kpi.action_rate_pct,
                         result.kpi.mean_sinr_db,
                         result.kpi.mean_tx_power_dbm,
                         result.kpi.energy_proxy_mwh])
            _say(args, f"{scenario.name} {kind:<10} "
                       f"outage {result.kpi.outage_rate_pct:7.3f}%  "
                       f"actions {result.kpi.action_rate_pct:6.2f}%")

    totals = {}
    for kind in controllers:
        reps = day_kpis[kind]
        steps = sum(r.n_steps for r in reps)
        outage = 100.0 * sum(r.outage_rate_pct / 100.0 * r.n_steps
                             for r in reps) / steps
        action = 100.0 * sum(r.action_rate_pct / 100.0 * r.n_steps
                             for r in reps) / steps
        mean_sinr = float(np.mean([r.mean_sinr_db for r in reps]))
        mean_tx = float(np.mean([r.mean_tx_power_dbm for r in reps]))
        energy = float(np.sum([r.energy_proxy_mwh for r in reps]))
        totals[kind] = (outage, action, mean_sinr, mean_tx, energy)
        rows.append(["aggregate", kind, "-", outage, action, mean_sinr,
                     mean_tx, energy])

    with open(compare_dir / COMPARISON_NAME, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "controller", "run_id", "outage_rate_pct",
                         "action_rate_pct", "mean_sinr_db",
                         "mean_tx_power_dbm", "energy_proxy_mwh"])
        for row in rows:
            writer.writerow([row[0], row[1], row[2]] +
                            [repr(float(v)) for v in row[3:]])

    ordering_days = sum(
        1 for i in range(args.days)
        if (day_kpis["proactive"][i].outage_rate_pct
            <= day_kpis["reactive"][i].outage_rate_pct
            <= day_kpis["fixed"][i].outage_rate_pct))
    success = [1.0 if r.outage_rate_pct == 0.0 else 0.0
               for r in day_kpis["proactive"]]
    success_cov = cov(success) if len(success) >= 2 else float("nan")
    sinr_cov = cov([r.mean_sinr_db for r in day_kpis["proactive"]])

    lines = [f"comparison over {args.days} event days (suite seed {seed})",
             ""]
    header = (f"{'controller':<12} {'outage%':>8} {'action%':>8} "
              f"{'sinr dB':>8} {'tx dBm':>7} {'MWh':>9}")
    lines += [header, "-" * len(header)]
    for kind in controllers:
        outage, action, mean_sinr, mean_tx, energy = totals[kind]
        lines.append(f"{kind:<12} {outage:>8.3f} {action:>8.2f} "
                     f"{mean_sinr:>8.3f} {mean_tx:>7.2f} "
                     f"{energy / 1e6:>9.4f}")
    lines += [
        "",
        f"day-wise outage ordering proactive <= reactive <= fixed: "
        f"{ordering_days}/{args.days} days",
        f"proactive outage-prevention success CoV: {success_cov:.4f}",
        f"proactive mean-SINR CoV: {sinr_cov:.4f}",
        "",
        "per-metric mean/std/cov per controller in aggregates-<controller>.csv",
    ]
    report = "\n".join(lines) + "\n"
    (compare_dir / "report.txt").write_text(report)
    for kind in controllers:
        write_aggregate_csv(aggregate(day_kpis[kind]),
                            compare_dir / f"aggregates-{kind}.csv")
    _say(args, "")
    _say(args, report.rstrip())
    _say(args, f"compare dir: {compare_dir}")
    return 0


def cmd_replay(args) -> int:
    if args.run is None:
        raise ScenarioError("replay requires --run <run directory>")
    new_dir, identical = replay_run(args.run, args.out, " ".join(sys.argv))
    _say(args, f"replayed into: {new_dir}")
    if identical:
        _say(args, "metrics.csv byte-identical: yes")
        return 0
    print("metrics.csv byte-identical: NO", file=sys.stderr)
    return 1


def cmd_report(args) -> int:
    if args.run is None:
        raise ScenarioError("report requires --run <run directory>")
    run_dir = Path(args.run)
    log = RunLog.read_csv(run_dir / METRICS_NAME)
    report = format_report(KpiReport.from_log(run_dir.name, log))
    print(report.rstrip())
    if args.out:
        out_dir = allocate_run_dir(args.out, f"report-{run_dir.name}")
        (out_dir / "report.txt").write_text(report)
        _say(args, f"written: {out_dir / 'report.txt'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellwarden",
        description="Deterministic single-cell stress simulator with "
                    "forecasting and tiered power control.")
    parser.add_argument("--version", action="version",
                        version=f"cellwarden {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="seed override (meaning depends on the command)")
    common.add_argument("--config", default=None,
                        help="scenario file")
    common.add_argument("--out", default="runs",
                        help="output root directory (default: runs)")
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational output")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common],
                       help="roll out a fixed-power training corpus")
    p.add_argument("--days", type=int, default=None,
                   help="corpus length in days (default: scenario's)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", parents=[common],
                       help="train the load forecaster on a corpus")
    p.add_argument("--corpus", default=None,
                   help="corpus directory from 'generate'")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--window", type=int, default=60)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--hidden1", type=int, default=128)
    p.add_argument("--hidden2", type=int, default=64)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", parents=[common],
                       help="run one controller over one scenario")
    p.add_argument("--controller", required=True,
                   help="fixed | reactive | proactive[:persona]")
    p.add_argument("--model", default=None, help="model archive path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", parents=[common],
                       help="three controllers across the event-day suite")
    p.add_argument("--model", required=True, help="model archive path")
    p.add_argument("--days", type=int, default=15,
                   help="number of suite days (default 15)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("replay", parents=[common],
                       help="re-execute a run from its manifest")
    p.add_argument("--run", required=True, help="run directory to replay")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", parents=[common],
                       help="recompute the KPI report for a run")
    p.add_argument("--run", required=True, help="run directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
