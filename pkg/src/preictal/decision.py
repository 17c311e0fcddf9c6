"""Decision fusion: turn detector and predictor outputs into WARN, ALARM and
CLEAR events, and feed confirmed detections back into the population.

Event log lines are JSON records with a frozen field order
(ts, window_id, kind, likelihood, score, signature_hex, config_version);
the log file is the audit trail, the stream payload and the export bundle
payload, so the format never varies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .config import EngineConfig
from .errors import PipelineOrderingError, ValidationError
from .immune import Population, append_new, match, promote

WARN = "WARN"
ALARM = "ALARM"
CLEAR = "CLEAR"


@dataclass(frozen=True)
class DetectorOutput:
    window_id: int
    state: str  # none | onset | ongoing
    likelihood: float


@dataclass(frozen=True)
class PredictorOutput:
    window_id: int
    fired: bool
    score: float


@dataclass(frozen=True)
class DecisionEvent:
    kind: str
    window_id: int
    timestamp_s: float
    likelihood: float
    prediction_score: float
    signature_hex: str
    config_version: int

    def to_json(self) -> str:
        return json.dumps({
            "ts": self.timestamp_s,
            "window_id": self.window_id,
            "kind": self.kind,
            "likelihood": self.likelihood,
            "score": self.prediction_score,
            "signature_hex": self.signature_hex,
            "config_version": self.config_version,
        })

    @classmethod
    def from_json(cls, line: str) -> "DecisionEvent":
        d = json.loads(line)
        return cls(
            kind=d["kind"],
            window_id=d["window_id"],
            timestamp_s=d["ts"],
            likelihood=d["likelihood"],
            prediction_score=d["score"],
            signature_hex=d["signature_hex"],
            config_version=d["config_version"],
        )


@dataclass
class DecisionState:
    alarm_active: bool = False
    none_streak: int = 0


def decide(
    det: DetectorOutput,
    pred: PredictorOutput,
    timestamp_s: float,
    signature_hex: str,
    config: EngineConfig,
    state: DecisionState,
) -> DecisionEvent | None:
    """Fuse one window's stage outputs into at most one event.

    ALARM fires on detector onset and dominates any concurrent predictor
    fire; WARN fires on prediction with no alarm active; CLEAR closes an
    alarm after duration_required consecutive quiet windows.
    """
    if det.window_id != pred.window_id:
        raise PipelineOrderingError(
            f"detector window {det.window_id} != predictor window {pred.window_id}"
        )

    def event(kind: str) -> DecisionEvent:
        return DecisionEvent(
            kind=kind,
            window_id=det.window_id,
            timestamp_s=timestamp_s,
            likelihood=det.likelihood,
            prediction_score=pred.score,
            signature_hex=signature_hex,
            config_version=config.version,
        )

    if det.state == "onset":
        state.alarm_active = True
        state.none_streak = 0
        return event(ALARM)
    if det.state == "ongoing":
        state.none_streak = 0
        return None
    # detector reports none
    if state.alarm_active:
        state.none_streak += 1
        if state.none_streak >= config.duration_required:
            state.alarm_active = False
            state.none_streak = 0
            return event(CLEAR)
        return None
    if pred.fired:
        return event(WARN)
    return None


def feedback(
    event: DecisionEvent,
    pop: Population,
    alarm_vector: np.ndarray | None,
    prealarm_vector: np.ndarray | None,
) -> Population:
    """Route a confirmed detection back into the population: promote the
    matching antibody, or append the pre-alarm exemplar when nothing
    matches."""
    if event.kind != ALARM:
        raise ValidationError("feedback only applies to ALARM events")
    if alarm_vector is not None:
        m = match(pop, alarm_vector)
        if m.min_affinity < pop.params.remove_threshold:
            return promote(pop, m.winner)
    if prealarm_vector is not None:
        return append_new(pop, prealarm_vector)
    return pop


class EventLog:
    """Append-only line-delimited event log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a")

    def append(self, event: DecisionEvent) -> None:
        self._fh.write(event.to_json() + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_events(path: str | Path) -> Iterator[DecisionEvent]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield DecisionEvent.from_json(line)
