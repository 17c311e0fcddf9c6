#!/usr/bin/env python3
"""Replay every evaluation recording against the trained bundle and print a
per-recording results table (predictions, detections, time-to-seizure) plus
the aggregate sensitivity, mean lead and false-positive rate."""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from preictal.config import EngineConfig
from preictal.evaluate import (ExperimentReport, score_run, window_confusion,
                               window_truth_labels)
from preictal.immune import load_bundle
from preictal.pipeline import run_recording
from preictal.recording import load_recording


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--corpus", default="corpus")
    parser.add_argument("--horizon", type=float, default=20.0)
    parser.add_argument("--td", type=float, default=None)
    parser.add_argument("--tp", type=float, default=None)
    parser.add_argument("--jsonl", default=None,
                        help="also write per-recording rows as JSON lines")
    args = parser.parse_args()

    corpus = Path(args.corpus)
    config = EngineConfig()
    overrides = {}
    if args.td is not None:
        overrides["td"] = args.td
    if args.tp is not None:
        overrides["tp"] = args.tp
    if overrides:
        config = config.with_updates(**overrides)

    paths = sorted(corpus.glob("eval_*.csv"))
    if not paths:
        print(f"error: no eval_*.csv under {corpus}; run make_corpus.py first",
              file=sys.stderr)
        return 1

    rows = []
    jsonl_lines = []
    print(f"{'recording':<14}{'E.S.':>5}{'Pred':>6}{'Det':>5}{'T-to-S(s)':>11}"
          f"{'FP/h':>7}")
    for path in paths:
        rec = load_recording(path)
        pop, ranges = load_bundle(corpus / "population.ais1")
        reports, events = run_recording(rec, config, population=pop, ranges=ranges)
        row = score_run(events, rec.annotations, args.horizon, rec.duration_s)
        (row.window_tp, row.window_tn,
         row.window_fp, row.window_fn) = window_confusion(
            reports, window_truth_labels(rec, config))
        rows.append(row)
        jsonl_lines.append(json.dumps({
            "recording": path.name,
            "seizures_annotated": row.seizures_annotated,
            "predicted": row.predicted,
            "detected": row.detected,
            "mean_time_to_seizure_s": row.mean_time_to_seizure_s,
            "false_warns": row.false_warns,
            "false_alarms": row.false_alarms,
            "accuracy": row.accuracy,
        }))
        print(f"{path.name:<14}{row.seizures_annotated:>5}{row.predicted:>6}"
              f"{row.detected:>5}{row.mean_time_to_seizure_s:>11.2f}"
              f"{row.fpr_per_hour:>7.2f}")

    if args.jsonl:
        Path(args.jsonl).write_text("\n".join(jsonl_lines) + "\n")

    report = ExperimentReport(rows)
    print("-" * 48)
    print(f"sensitivity      {report.sensitivity:.2f}")
    print(f"prediction rate  {report.prediction_rate:.2f}")
    print(f"accuracy         {report.accuracy:.2f}")
    print(f"mean lead        {report.mean_lead_s:.2f} s")
    print(f"false pos / hour {report.fpr_per_hour:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
