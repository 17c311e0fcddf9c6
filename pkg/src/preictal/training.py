"""Population training: harvest a self set from inter-ictal windows, censor
random detectors against it, then optionally replay the training data so the
detection feedback loop seeds the stack with real pre-ictal exemplars.

The trained bundle carries the final quantization ranges alongside the
population; detectors are only meaningful in the coordinate frame they were
trained in, so the two always travel together.
"""

from __future__ import annotations

import numpy as np

from .config import EngineConfig
from .errors import ValidationError
from .immune import AisParams, Population, negative_selection_train
from .pipeline import Pipeline
from .recording import EegRecording, windows
from .signature import RunningRanges, dequantize, from_hex

# keep this much clearance around annotated seizures when harvesting "normal"
GUARD_BEFORE_S = 30.0
GUARD_AFTER_S = 10.0


def is_interictal(start_s: float, end_s: float, rec: EegRecording) -> bool:
    for ann in rec.annotations:
        lo = ann.onset_s - GUARD_BEFORE_S
        hi = ann.offset_s + GUARD_AFTER_S
        if start_s < hi and end_s > lo:
            return False
    return True


def collect_self_set(
    rec: EegRecording,
    config: EngineConfig,
    ranges: RunningRanges | None = None,
    max_vectors: int = 2000,
) -> tuple[list[np.ndarray], RunningRanges]:
    """Signatures of windows well clear of any annotated seizure.

    Returns the dequantized vectors and the running ranges they were
    quantized under (updated in place when one is passed in).
    """
    config.validate_for_rate(rec.sample_rate_hz)
    ranges = ranges if ranges is not None else RunningRanges()
    pipe = Pipeline(config=config, population=None, ranges=ranges)
    window_s = config.window_samples(rec.sample_rate_hz) / rec.sample_rate_hz
    vectors: list[np.ndarray] = []
    for w in windows(rec, config):
        report = pipe.process(w)
        start_s = report.start_s
        if not is_interictal(start_s, start_s + window_s, rec):
            continue
        if len(vectors) >= max_vectors:
            break
        sig = from_hex(report.signature_hex)
        if not sig.is_sentinel:
            vectors.append(dequantize(sig))
    if not vectors:
        raise ValidationError("recording yields no inter-ictal windows")
    return vectors, ranges


def train_population(
    recordings: list[EegRecording],
    config: EngineConfig,
    params: AisParams | None = None,
    seed: int = 0,
    replay_learn: bool = True,
) -> tuple[Population, RunningRanges]:
    """Full training pass over one or more recordings.

    Harvests self vectors from every recording (sharing one set of running
    ranges), censors the initial detectors, then replays the recordings
    through a live pipeline so confirmed detections append their pre-ictal
    exemplars to the stack.
    """
    if not recordings:
        raise ValidationError("need at least one training recording")
    params = params or AisParams()
    ranges = RunningRanges()
    self_set: list[np.ndarray] = []
    for rec in recordings:
        vecs, ranges = collect_self_set(rec, config, ranges)
        self_set.extend(vecs)
    pop = negative_selection_train(self_set, params, seed)
    if replay_learn:
        for rec in recordings:
            pipe = Pipeline(config=config, population=pop, ranges=ranges)
            pipe.run(rec)
    return pop, ranges
