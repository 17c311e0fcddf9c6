#!/usr/bin/env python3
"""Sweep the detection threshold over the corpus and compare the resulting
ROC area against the coin-flip baseline; writes both curves as CSV for
plotting."""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from preictal.config import EngineConfig
from preictal.evaluate import (
    baseline_roc_points,
    roc_area,
    sweep_to_csv,
    threshold_sweep,
)
from preictal.recording import load_recording


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--corpus", default="corpus")
    parser.add_argument("--out", default="curves")
    parser.add_argument("--grid",
                        default="0.05,0.1,0.15,0.2,0.23,0.3,0.45,0.65,0.85,0.95")
    parser.add_argument("--baseline-seeds", type=int, default=50)
    args = parser.parse_args()

    corpus = Path(args.corpus)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = EngineConfig()
    recordings = [load_recording(p) for p in sorted(corpus.glob("eval_*.csv"))]
    if not recordings:
        print(f"error: no eval_*.csv under {corpus}", file=sys.stderr)
        return 1

    grid = [float(x) for x in args.grid.split(",")]
    engine_points = threshold_sweep(recordings, config, grid)
    (out / "engine_td.csv").write_text(sweep_to_csv(engine_points))
    engine_area = roc_area(engine_points)

    rates = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]
    areas = []
    last_points = None
    for seed in range(args.baseline_seeds):
        last_points = baseline_roc_points(recordings[0], config, rates,
                                          seed=seed * 31)
        areas.append(roc_area(last_points))
    (out / "baseline.csv").write_text(sweep_to_csv(last_points))

    print(f"engine ROC area   {engine_area:.3f}")
    print(f"baseline ROC area {np.mean(areas):.3f} +- {np.std(areas):.3f} "
          f"({args.baseline_seeds} seeds)")
    print(f"curves written to {out}/", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
