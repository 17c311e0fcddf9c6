#!/usr/bin/env python3
"""Generate the synthetic experiment corpus: one 600 s training recording
with four seizures and ten 300 s evaluation recordings with one seizure
each (pre-ictal lead 14 s), plus a trained population bundle."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from preictal.config import EngineConfig
from preictal.immune import AisParams, save_bundle
from preictal.recording import SynthSpec, generate_synthetic, write_recording
from preictal.training import train_population


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="corpus")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--recordings", type=int, default=10)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = EngineConfig()

    train_rec = generate_synthetic(
        SynthSpec(duration_s=600.0, seizure_times=(100.0, 220.0, 340.0, 460.0),
                  seizure_len_s=20.0, preictal_lead_s=14.0, seed=101)
    )
    write_recording(train_rec, out / "train.csv")
    print(f"train.csv: 600s, {len(train_rec.annotations)} seizures", file=sys.stderr)

    for i in range(args.recordings):
        rec = generate_synthetic(
            SynthSpec(duration_s=300.0, seizure_times=(150.0 + (i % 5),),
                      seizure_len_s=20.0, preictal_lead_s=14.0, seed=1000 + i)
        )
        write_recording(rec, out / f"eval_{i:02d}.csv")

    pop, ranges = train_population([train_rec], config, AisParams(), seed=args.seed)
    save_bundle(pop, out / "population.ais1", ranges)
    print(f"population.ais1: {len(pop.slt)} detectors, "
          f"{len(pop.self_set)} self vectors", file=sys.stderr)
    print(f"corpus ready in {out}/", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
