"""Experiment harness: event scoring against annotations, threshold sweeps,
and the seeded random-guess baseline.

Scoring rules: a WARN is a true prediction when an annotated onset falls in
(t_warn, t_warn + horizon]; an ALARM is a true detection when it lands inside
an annotated interval. One credit per onset; surplus WARNs inside a credited
horizon and surplus ALARMs inside a detected interval count as neither hits
nor false positives. Everything else is a false positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import EngineConfig
from .decision import ALARM, WARN, DecisionEvent
from .errors import ValidationError
from .pipeline import run_recording
from .recording import EegRecording, SeizureAnnotation

DEFAULT_HORIZON_S = 20.0


@dataclass
class ScoreRow:
    seizures_annotated: int
    predicted: int
    detected: int
    mean_time_to_seizure_s: float
    lead_times_s: list[float] = field(default_factory=list)
    false_warns: int = 0
    false_alarms: int = 0
    duration_hours: float = 0.0
    # window-level detection confusion, filled by window_confusion
    window_tp: int = 0
    window_tn: int = 0
    window_fp: int = 0
    window_fn: int = 0

    @property
    def fpr_per_hour(self) -> float:
        if self.duration_hours <= 0:
            return 0.0
        return (self.false_warns + self.false_alarms) / self.duration_hours

    @property
    def accuracy(self) -> float:
        total = self.window_tp + self.window_tn + self.window_fp + self.window_fn
        if total == 0:
            return 0.0
        return (self.window_tp + self.window_tn) / total


@dataclass
class ExperimentReport:
    rows: list[ScoreRow]

    @property
    def sensitivity(self) -> float:
        annotated = sum(r.seizures_annotated for r in self.rows)
        detected = sum(r.detected for r in self.rows)
        return detected / annotated if annotated else 0.0

    @property
    def prediction_rate(self) -> float:
        annotated = sum(r.seizures_annotated for r in self.rows)
        predicted = sum(r.predicted for r in self.rows)
        return predicted / annotated if annotated else 0.0

    @property
    def mean_lead_s(self) -> float:
        leads = [t for r in self.rows for t in r.lead_times_s]
        return float(np.mean(leads)) if leads else 0.0

    @property
    def accuracy(self) -> float:
        tp = sum(r.window_tp for r in self.rows)
        tn = sum(r.window_tn for r in self.rows)
        fp = sum(r.window_fp for r in self.rows)
        fn = sum(r.window_fn for r in self.rows)
        total = tp + tn + fp + fn
        return (tp + tn) / total if total else 0.0

    @property
    def fpr_per_hour(self) -> float:
        hours = sum(r.duration_hours for r in self.rows)
        if hours <= 0:
            return 0.0
        fps = sum(r.false_warns + r.false_alarms for r in self.rows)
        return fps / hours


def score_run(
    events: list[DecisionEvent],
    truth: list[SeizureAnnotation],
    horizon_s: float = DEFAULT_HORIZON_S,
    duration_s: float = 0.0,
) -> ScoreRow:
    """Match a decision stream against ground truth annotations."""
    if horizon_s <= 0:
        raise ValidationError("horizon_s must be positive")
    last = None
    for ev in events:
        if last is not None and ev.window_id < last:
            raise ValidationError("event stream not ordered by window")
        last = ev.window_id

    onsets = sorted(ann.onset_s for ann in truth)
    intervals = sorted((ann.onset_s, ann.offset_s) for ann in truth)

    predicted_onsets: dict[float, float] = {}  # onset -> earliest credited warn
    false_warns = 0
    for ev in events:
        if ev.kind != WARN:
            continue
        t = ev.timestamp_s
        credited = False
        for onset in onsets:
            if t < onset <= t + horizon_s:
                if onset not in predicted_onsets:
                    predicted_onsets[onset] = t
                credited = True
                break
        if not credited:
            false_warns += 1

    detected_intervals: set[tuple[float, float]] = set()
    false_alarms = 0
    for ev in events:
        if ev.kind != ALARM:
            continue
        t = ev.timestamp_s
        hit = None
        for iv in intervals:
            if iv[0] <= t <= iv[1]:
                hit = iv
                break
        if hit is None:
            false_alarms += 1
        else:
            detected_intervals.add(hit)

    leads = [onset - t for onset, t in sorted(predicted_onsets.items())]
    return ScoreRow(
        seizures_annotated=len(truth),
        predicted=len(predicted_onsets),
        detected=len(detected_intervals),
        mean_time_to_seizure_s=float(np.mean(leads)) if leads else 0.0,
        lead_times_s=leads,
        false_warns=false_warns,
        false_alarms=false_alarms,
        duration_hours=duration_s / 3600.0,
    )


@dataclass
class SweepPoint:
    threshold: float
    fpr: float
    tpr: float


def window_confusion(reports, labels: np.ndarray) -> tuple[int, int, int, int]:
    """Window-level detection confusion (tp, tn, fp, fn): the engine's call
    is the detector being in onset/ongoing for that window."""
    tp = tn = fp = fn = 0
    for rep in reports:
        truth = bool(labels[rep.window_id]) if rep.window_id < len(labels) else False
        called = rep.detector_state in ("onset", "ongoing")
        if called and truth:
            tp += 1
        elif called:
            fp += 1
        elif truth:
            fn += 1
        else:
            tn += 1
    return tp, tn, fp, fn


def window_truth_labels(rec: EegRecording, config: EngineConfig) -> np.ndarray:
    """Per-window ictal labels: a window is positive when its span overlaps
    an annotated seizure."""
    window_s = config.window_samples(rec.sample_rate_hz) / rec.sample_rate_hz
    n_windows = int(np.ceil(rec.duration_s / window_s)) if rec.duration_s else 0
    labels = np.zeros(n_windows, dtype=bool)
    for ann in rec.annotations:
        first = int(ann.onset_s // window_s)
        last = int(min(ann.offset_s, rec.duration_s - 1e-9) // window_s)
        labels[first : last + 1] = True
    return labels


def threshold_sweep(
    recordings: list[EegRecording],
    config: EngineConfig,
    grid: list[float],
    which: str = "td",
    population_factory=None,
) -> list[SweepPoint]:
    """Run the full pipeline once per grid value and report window-level
    FPR/TPR of the swept stage.

    For td the per-window positive decision is a raw detector hit
    (likelihood above threshold); for tp it is a predictor fire.
    population_factory, when given, builds a fresh population per run so
    feedback learning never leaks across grid points.
    """
    if not grid:
        raise ValidationError("grid must be non-empty")
    if which not in ("td", "tp"):
        raise ValidationError("which must be 'td' or 'tp'")
    points = []
    for value in grid:
        cfg = config.with_updates(**{which: value})
        tp_count = fp_count = pos = neg = 0
        for rec in recordings:
            pop = population_factory() if population_factory is not None else None
            reports, _ = run_recording(rec, cfg, population=pop)
            labels = window_truth_labels(rec, cfg)
            for rep in reports:
                positive = labels[rep.window_id] if rep.window_id < len(labels) else False
                if which == "td":
                    hit = rep.likelihood > value
                else:
                    hit = rep.prediction_fired
                pos += positive
                neg += not positive
                tp_count += hit and positive
                fp_count += hit and not positive
        points.append(
            SweepPoint(
                threshold=value,
                fpr=fp_count / neg if neg else 0.0,
                tpr=tp_count / pos if pos else 0.0,
            )
        )
    return points


def roc_area(points: list[SweepPoint]) -> float:
    """Trapezoidal area under the (fpr, tpr) curve, closed at (0,0) and
    (1,1)."""
    pts = sorted({(p.fpr, p.tpr) for p in points} | {(0.0, 0.0), (1.0, 1.0)})
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    return float(np.trapezoid(ys, xs))


def random_baseline(
    rec: EegRecording,
    config: EngineConfig,
    fire_rate: float,
    seed: int = 0,
    horizon_s: float = DEFAULT_HORIZON_S,
) -> tuple[ScoreRow, list[DecisionEvent]]:
    """WARN coin flips per window, scored exactly like the engine."""
    if not (0.0 <= fire_rate <= 1.0):
        raise ValidationError("fire_rate must be in [0,1]")
    rng = np.random.default_rng(seed)
    window_s = config.window_samples(rec.sample_rate_hz) / rec.sample_rate_hz
    n_windows = int(np.ceil(rec.duration_s / window_s))
    events = []
    for wid in range(n_windows):
        if rng.random() < fire_rate:
            events.append(
                DecisionEvent(
                    kind=WARN,
                    window_id=wid,
                    timestamp_s=wid * window_s,
                    likelihood=0.0,
                    prediction_score=fire_rate,
                    signature_hex="00" * 21,
                    config_version=config.version,
                )
            )
    row = score_run(events, rec.annotations, horizon_s, rec.duration_s)
    return row, events


def baseline_roc_points(
    rec: EegRecording,
    config: EngineConfig,
    rates: list[float],
    seed: int = 0,
) -> list[SweepPoint]:
    """Window-level ROC of the coin-flip baseline over a grid of rates."""
    labels = window_truth_labels(rec, config)
    window_s = config.window_samples(rec.sample_rate_hz) / rec.sample_rate_hz
    n_windows = int(np.ceil(rec.duration_s / window_s))
    points = []
    for i, rate in enumerate(rates):
        rng = np.random.default_rng(seed + i)
        fires = rng.random(n_windows) < rate
        pos = labels.sum()
        neg = n_windows - pos
        tpr = float(fires[labels].sum() / pos) if pos else 0.0
        fpr = float(fires[~labels].sum() / neg) if neg else 0.0
        points.append(SweepPoint(threshold=rate, fpr=fpr, tpr=tpr))
    return points


def sweep_to_csv(points: list[SweepPoint]) -> str:
    lines = ["threshold,fpr,tpr"]
    for p in points:
        lines.append(f"{p.threshold},{p.fpr},{p.tpr}")
    return "\n".join(lines) + "\n"
