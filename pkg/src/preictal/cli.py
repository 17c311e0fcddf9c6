"""Operator CLI: train populations, replay recordings, sweep thresholds,
generate synthetic corpora, serve the monitor API.

Every command exits 0 on success and nonzero with a one-line reason on
stderr otherwise. Machine-readable output goes to files; progress notes go
to stderr so redirects stay clean.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .config import EngineConfig
from .decision import EventLog
from .errors import EngineError
from .evaluate import (
    score_run,
    sweep_to_csv,
    threshold_sweep,
    window_confusion,
    window_truth_labels,
)
from .immune import AisParams, load_bundle, save_bundle
from .pipeline import run_recording
from .recording import SynthSpec, generate_synthetic, load_recording, write_recording
from .training import train_population

CONFIG_FLAGS = {
    "td": float,
    "tp": float,
    "duration": int,
    "gamma": float,
    "gain": float,
    "w": int,
    "delta_shift": int,
    "artifact_threshold": float,
    "ar_order": int,
    "dwt_levels": int,
}

FLAG_TO_FIELD = {"duration": "duration_required", "gamma": "gamma_s"}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for flag, typ in CONFIG_FLAGS.items():
        parser.add_argument(f"--{flag.replace('_', '-')}", type=typ, default=None)
    parser.add_argument("--band", type=str, default=None, help="low:high in Hz")
    parser.add_argument("--config", type=str, default=None,
                        help="key=value config file")


def _parse_config_file(path: str) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise EngineError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_config(args: argparse.Namespace) -> EngineConfig:
    values: dict = {}
    if getattr(args, "config", None):
        raw = _parse_config_file(args.config)
        valid = {f.name: f.type for f in fields(EngineConfig)}
        for k, v in raw.items():
            if k not in valid:
                raise EngineError(f"unknown config key {k!r}")
            typ = float if "float" in str(valid[k]) else int
            values[k] = typ(v)
    for flag in CONFIG_FLAGS:
        v = getattr(args, flag, None)
        if v is not None:
            values[FLAG_TO_FIELD.get(flag, flag)] = v
    band = getattr(args, "band", None)
    if band:
        low, _, high = band.partition(":")
        values["band_low_hz"] = float(low)
        values["band_high_hz"] = float(high)
    cfg = EngineConfig(**values)
    cfg.validate()
    return cfg


def cmd_synth(args) -> int:
    spec = SynthSpec(
        duration_s=args.duration_s,
        channel_count=args.channels,
        sample_rate_hz=args.rate,
        seizure_times=tuple(args.seizure) if args.seizure else (),
        seizure_len_s=args.seizure_len,
        preictal_lead_s=args.lead,
        artifact_bursts=tuple(args.artifact) if args.artifact else (),
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    rec = generate_synthetic(spec)
    write_recording(rec, args.out)
    print(f"wrote {args.out} ({rec.duration_s:.0f}s, {len(rec.annotations)} seizures)",
          file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    config = build_config(args)
    recordings = [load_recording(p) for p in args.data]
    params = AisParams(tp=config.tp)
    if args.antibodies:
        from dataclasses import replace

        params = replace(params, antibody_count=args.antibodies)
    pop, ranges = train_population(
        recordings, config, params, seed=args.seed,
        replay_learn=not args.no_replay_learn,
    )
    save_bundle(pop, args.out, ranges)
    print(f"wrote {args.out} ({len(pop.slt)} detectors, {len(pop.self_set)} self vectors)",
          file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    config = build_config(args)
    rec = load_recording(args.recording)
    population = None
    ranges = None
    if args.bundle:
        population, ranges = load_bundle(args.bundle)
    log = EventLog(args.log) if args.log else None
    try:
        reports, events = run_recording(
            rec, config, population=population, ranges=ranges,
            on_event=log.append if log else None,
        )
    finally:
        if log:
            log.close()
    if args.dump_signatures:
        Path(args.dump_signatures).write_text(
            "".join(r.signature_hex + "\n" for r in reports)
        )
    row = score_run(events, rec.annotations, args.horizon, rec.duration_s)
    labels = window_truth_labels(rec, config)
    row.window_tp, row.window_tn, row.window_fp, row.window_fn = window_confusion(
        reports, labels
    )
    print(json.dumps({
        "windows": len(reports),
        "seizures_annotated": row.seizures_annotated,
        "predicted": row.predicted,
        "detected": row.detected,
        "mean_time_to_seizure_s": row.mean_time_to_seizure_s,
        "false_warns": row.false_warns,
        "false_alarms": row.false_alarms,
        "fpr_per_hour": row.fpr_per_hour,
        "accuracy": row.accuracy,
    }))
    return 0


def cmd_sweep(args) -> int:
    config = build_config(args)
    rec = load_recording(args.recording)
    grid = [float(x) for x in args.grid.split(",")]

    factory = None
    if args.bundle:
        def factory():
            pop, _ = load_bundle(args.bundle)
            return pop

    points = threshold_sweep([rec], config, grid, which=args.which,
                             population_factory=factory)
    Path(args.out).write_text(sweep_to_csv(points))
    print(f"wrote {args.out} ({len(points)} grid points)", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir)
    host, _, port = args.bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="preictal")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic recording")
    p.add_argument("out")
    p.add_argument("--duration-s", type=float, default=300.0)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--rate", type=int, default=250)
    p.add_argument("--seizure", type=float, action="append", default=None)
    p.add_argument("--seizure-len", type=float, default=20.0)
    p.add_argument("--lead", type=float, default=14.0)
    p.add_argument("--artifact", type=float, action="append", default=None)
    p.add_argument("--noise-sigma", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a population bundle from recordings")
    p.add_argument("data", nargs="+", help="training recording paths")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--antibodies", type=int, default=None)
    p.add_argument("--no-replay-learn", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="offline replay of one recording")
    p.add_argument("recording")
    p.add_argument("--bundle", default=None)
    p.add_argument("--log", default=None, help="event log output path")
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--dump-signatures", default=None,
                   help="write per-window signatures, one hex word per line")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="threshold sweep, CSV out")
    p.add_argument("recording")
    p.add_argument("--which", choices=("td", "tp"), default="td")
    p.add_argument("--grid", default="0.1,0.15,0.2,0.23,0.25,0.3,0.4,0.6,0.8")
    p.add_argument("--bundle", default=None)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the monitoring service")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--data-dir", default="sessions")
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
