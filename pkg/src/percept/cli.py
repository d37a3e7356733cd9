"""Command-line entry points: simulate, study, analyze, serve, export.

Exit codes: 0 success, 2 invalid flags or unreadable input files, 1 runtime
failure. `--seed` falls back to the PERCEPT_SEED environment variable, then
to the cohort spec's seed (study), then to 0.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .errors import PerceptError
from .observers import ObserverParameterError, load_observer
from .report import analyze_study, render_report_text, report_to_json
from .service import read_completed_trials, serve_forever
from .session import (
    BodySite,
    ObserverResponder,
    SessionConfig,
    export_trial_csv,
    run_trial,
)
from .staircase import StaircaseConfig
from .study import (
    CohortSpecError,
    ExclusionRule,
    flag_measurements,
    generate_cohort,
    load_cohort_spec,
    measurements_from_csv,
    measurements_to_csv,
    rng_for,
    run_virtual_study,
)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def resolve_seed(flag_value, spec_seed=None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("PERCEPT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise PerceptError(f"PERCEPT_SEED must be an integer, got {env!r}") from None
    if spec_seed is not None:
        return spec_seed
    return 0


def _json_value(v):
    if isinstance(v, float) and math.isnan(v):
        return "NaN"
    return v


def cmd_simulate(args) -> int:
    observer_path = Path(args.observer)
    if not observer_path.exists():
        return _fail(f"--observer: file not found: {observer_path}", 2)
    if args.trials < 1:
        return _fail("--trials: must be >= 1", 2)
    try:
        observer = load_observer(observer_path)
    except (ObserverParameterError, json.JSONDecodeError) as exc:
        return _fail(f"--observer: {exc}", 2)
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    session_config = SessionConfig()
    staircase_config = StaircaseConfig()
    site = BodySite[args.site]
    width = max(4, len(str(args.trials)))
    thresholds = []
    nan_trials = 0
    for i in range(args.trials):
        rng = rng_for(seed, "simulate", i)
        record = run_trial(
            session_config,
            staircase_config,
            ObserverResponder(observer, rng, latency_s=args.latency),
            rng,
            participant_id=args.participant_id,
            site=site,
            rep_index=i,
        )
        (out / f"trial_{i + 1:0{width}d}.csv").write_bytes(export_trial_csv(record))
        thresholds.append(record.threshold.value)
        if record.threshold.saturated:
            nan_trials += 1

    finite = [t for t in thresholds if not math.isnan(t)]
    summary = {
        "seed": seed,
        "trials": args.trials,
        "site": site.code,
        "observer": {
            "alpha": observer.alpha,
            "beta": observer.beta,
            "guess": observer.guess_rate,
            "lapse": observer.lapse_rate,
            "false_positive_rate": observer.false_positive_rate,
        },
        "mean_threshold": _json_value(
            math.fsum(finite) / len(finite) if finite else math.nan
        ),
        "nan_trials": nan_trials,
        "thresholds": [_json_value(t) for t in thresholds],
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, allow_nan=False) + "\n"
    )
    print(
        f"simulated {args.trials} trials (seed {seed}): mean threshold "
        f"{summary['mean_threshold']}, {nan_trials} NaN"
    )
    return 0


def cmd_study(args) -> int:
    try:
        spec = load_cohort_spec(args.spec)
    except CohortSpecError as exc:
        return _fail(f"--spec: {exc}", 2)
    seed = resolve_seed(args.seed, spec.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cohort = generate_cohort(spec, rng_for(seed, "cohort"))
    run = run_virtual_study(cohort, seed, spec=spec)
    rule = ExclusionRule(
        max_false_positives=args.max_false_positives,
        equipment_change_flag=not args.no_equipment_exclusion,
    )
    flagged = flag_measurements(run.measurements, rule, run.logs)

    csv_bytes = measurements_to_csv(flagged)
    (out / "measurements.csv").write_bytes(csv_bytes)
    report = analyze_study(flagged)
    (out / "report.json").write_bytes(report_to_json(report))
    (out / "report.txt").write_text(render_report_text(report))
    print(
        f"study complete (seed {seed}): {report.n_participants_retained} retained, "
        f"{report.n_participants_excluded} excluded -> {out}"
    )
    return 0


def cmd_analyze(args) -> int:
    path = Path(args.measurements)
    if not path.exists():
        return _fail(f"--measurements: file not found: {path}", 2)
    try:
        measurements = measurements_from_csv(path.read_bytes())
    except PerceptError as exc:
        return _fail(f"--measurements: {exc}", 2)
    report = analyze_study(measurements)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_bytes(report_to_json(report))
        (out / "report.txt").write_text(render_report_text(report))
        print(f"report written to {out}")
    else:
        print(render_report_text(report), end="")
    return 0


def cmd_serve(args) -> int:
    if args.static and not Path(args.static).is_dir():
        return _fail(f"--static: not a directory: {args.static}", 2)
    seed = resolve_seed(args.seed) if (args.seed is not None or "PERCEPT_SEED" in os.environ) else None
    print(f"serving on port {args.port} (static={args.static or 'none'})")
    serve_forever(
        args.port,
        seed=seed,
        static_dir=args.static,
        event_log_path=args.session_log,
    )
    return 0


def cmd_export(args) -> int:
    log_path = Path(args.session_log)
    if not log_path.exists():
        return _fail(f"--session-log: file not found: {log_path}", 2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for record, session_id in read_completed_trials(log_path):
        pid = record.participant_id or "anon"
        site = record.site.code if record.site else "NA"
        name = f"{pid}_{site}_rep{record.rep_index}_{session_id}.csv"
        (out / name).write_bytes(export_trial_csv(record))
        count += 1
    print(f"exported {count} completed trial(s) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percept",
        description="Adaptive vibrotactile perception-threshold exams and analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run seeded staircase trials against an observer")
    p.add_argument("--observer", required=True, help="observer parameter JSON file")
    p.add_argument("--trials", type=int, required=True, help="number of trials (>= 1)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--site", choices=[s.code for s in BodySite], default="H1")
    p.add_argument("--participant-id", default="sim")
    p.add_argument("--latency", type=float, default=0.5, help="response latency seconds")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study", help="run the full virtual study and analysis")
    p.add_argument("--spec", default=None, help="cohort spec JSON (default: packaged calibrated spec)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--max-false-positives", type=int, default=3)
    p.add_argument("--no-equipment-exclusion", action="store_true")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("analyze", help="recompute the report from a measurement CSV")
    p.add_argument("--measurements", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--static", default=None, help="directory of client assets to serve")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--session-log", default=None, help="append-only JSONL event log")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="convert a session event log to trial CSVs")
    p.add_argument("--session-log", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PerceptError as exc:
        return _fail(str(exc), 1)
    except OSError as exc:
        return _fail(str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
