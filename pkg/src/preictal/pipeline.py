"""Single-owner streaming pipeline: one recording (or push source) in,
decision events out.

Per window: condition, encode the signature, run the detector and the
predictor in parallel over the same window, fuse, feed confirmed detections
back into the population, then run scheduled population maintenance. Config
updates are queued and applied only between windows.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .conditioning import ConditionedWindow, StreamingBandpass, condition
from .config import EngineConfig
from .decision import (
    DecisionEvent,
    DecisionState,
    DetectorOutput,
    PredictorOutput,
    decide,
    feedback,
)
from .detector import AdaptiveThreshold, DetectionState, combined_likelihood, detect, sync_matrix
from .errors import ValidationError
from .immune import Population, clonal_step, match, mutation_tick, promote
from .recording import EegRecording, SlidingWindow, windows
from .signature import RunningRanges, SENTINEL, dequantize, generate, to_hex, window_features


@dataclass
class WindowReport:
    window_id: int
    start_s: float
    likelihood: float
    detector_state: str
    prediction_score: float
    prediction_fired: bool
    signature_hex: str
    threshold_value: float
    config_version: int
    event: DecisionEvent | None = None


@dataclass
class Pipeline:
    config: EngineConfig
    population: Population | None = None
    ranges: RunningRanges = field(default_factory=RunningRanges)
    wavelet: str = "haar"
    maturation_enabled: bool = True  # clonal refinement + scheduled mutation
    on_event: Callable[[DecisionEvent], None] | None = None

    def __post_init__(self):
        self.config.validate()
        self._pending_config: EngineConfig | None = None
        self._ar_history: np.ndarray | None = None
        self._bandpass: StreamingBandpass | None = None
        self._det_state = DetectionState(
            td=self.config.td, duration_required=self.config.duration_required
        )
        self._decision_state = DecisionState()
        self._threshold: AdaptiveThreshold | None = None
        self._recent_vectors: deque = deque(maxlen=self.config.duration_required + 2)
        self.windows_processed = 0
        self.last_window_id: int | None = None
        self.events: list[DecisionEvent] = []
        self._sync_population_params()

    def _sync_population_params(self) -> None:
        # the clinician-facing tp lives on the config; the matcher reads it
        # from the population params, so keep them in lockstep
        if self.population is not None and self.population.params.tp != self.config.tp:
            self.population.params = replace(self.population.params, tp=self.config.tp)

    # -- configuration ----------------------------------------------------

    def request_config(self, new_config: EngineConfig) -> tuple[int, int]:
        """Queue a validated config for the next window boundary.

        Returns (applied_version, last_window_id_under_old_config). Rejected
        configs raise ConfigError and leave the current one untouched.
        """
        new_config.validate()
        applied = new_config.version
        if applied <= self.config.version:
            applied = self.config.version + 1
            new_config = new_config.with_updates(version=applied)
        self._pending_config = new_config
        boundary = self.last_window_id if self.last_window_id is not None else -1
        return applied, boundary

    def _apply_pending(self) -> None:
        if self._pending_config is None:
            return
        old = self.config
        self.config = self._pending_config
        self._pending_config = None
        self._det_state.td = self.config.td
        self._det_state.duration_required = self.config.duration_required
        if (old.gain, old.band_low_hz, old.band_high_hz) != (
            self.config.gain, self.config.band_low_hz, self.config.band_high_hz
        ):
            self._bandpass = None  # rebuilt (context reset) on the next window
        if self.config.duration_required != old.duration_required:
            self._recent_vectors = deque(
                self._recent_vectors, maxlen=self.config.duration_required + 2
            )
        self._sync_population_params()

    # -- processing --------------------------------------------------------

    def process(self, window: SlidingWindow) -> WindowReport:
        self._apply_pending()
        if self.last_window_id is not None and window.window_id != self.last_window_id + 1:
            raise ValidationError(
                f"window {window.window_id} out of order after {self.last_window_id}"
            )

        if self._bandpass is None:
            self._bandpass = StreamingBandpass(
                self.config, window.sample_rate_hz, window.data.shape[0]
            )
        cond = condition(window, self.config, self._ar_history, self.wavelet,
                         bandpass=self._bandpass)
        self._ar_history = cond.filtered.copy()

        sig = self._encode(cond)
        sig_hex = to_hex(sig)

        likelihood = combined_likelihood(sync_matrix(cond))
        det_kind = detect(self._det_state, likelihood)
        threshold_value = self._update_error_threshold(cond)

        vec = None if sig.is_sentinel else dequantize(sig)
        fired, score = self._predict(vec)
        self._recent_vectors.append((window.window_id, vec))

        start_s = window.start_sample / window.sample_rate_hz
        event = decide(
            DetectorOutput(window.window_id, det_kind, likelihood),
            PredictorOutput(window.window_id, fired, score),
            start_s,
            sig_hex,
            self.config,
            self._decision_state,
        )
        if event is not None:
            self.events.append(event)
            if self.on_event is not None:
                self.on_event(event)
            if event.kind == "ALARM" and self.population is not None:
                feedback(event, self.population, vec, self._prealarm_vector(window.window_id))

        if self.population is not None:
            self.population.tick_age()
            if self.maturation_enabled:
                mutation_tick(self.population, window.window_id, self.config.duration_required)

        self.windows_processed += 1
        self.last_window_id = window.window_id
        return WindowReport(
            window_id=window.window_id,
            start_s=start_s,
            likelihood=likelihood,
            detector_state=det_kind,
            prediction_score=score,
            prediction_fired=fired,
            signature_hex=sig_hex,
            threshold_value=threshold_value,
            config_version=self.config.version,
            event=event,
        )

    def run(self, rec: EegRecording) -> list[WindowReport]:
        return [self.process(w) for w in windows(rec, self.config)]

    # -- helpers -----------------------------------------------------------

    def _encode(self, cond: ConditionedWindow):
        if not np.any(cond.dwt_coeffs):
            return SENTINEL
        features, _ = window_features(cond)
        self.ranges.update(features)
        return generate(cond, self.config, self.ranges, features=features)

    def _predict(self, vec: np.ndarray | None) -> tuple[bool, float]:
        if vec is None or self.population is None or not self.population.slt:
            return False, 0.0
        m = match(self.population, vec)
        if m.fired:
            promote(self.population, m.winner)
            if self.maturation_enabled:
                # antigen-driven refinement: breed censored clones toward the
                # matched signature so the table tracks drifting patterns
                clonal_step(self.population, vec)
        return m.fired, m.score

    def _update_error_threshold(self, cond: ConditionedWindow) -> float:
        if cond.ar_residuals is None:
            return 0.0 if self._threshold is None else self._threshold.current_value
        dominant = int(np.argmax(np.sum(cond.dwt_coeffs**2, axis=1)))
        if self._threshold is None:
            self._threshold = AdaptiveThreshold(
                gamma_s=self.config.gamma_s, window_n=cond.filtered.shape[1]
            )
        self._threshold.gamma_s = self.config.gamma_s
        self._threshold.update_many(cond.ar_residuals[dominant])
        return self._threshold.current_value

    def _prealarm_vector(self, onset_window_id: int) -> np.ndarray | None:
        want = onset_window_id - self.config.duration_required
        for wid, vec in self._recent_vectors:
            if wid == want:
                return vec
        return None


def run_recording(
    rec: EegRecording,
    config: EngineConfig,
    population: Population | None = None,
    ranges: RunningRanges | None = None,
    on_event: Callable[[DecisionEvent], None] | None = None,
    wavelet: str = "haar",
) -> tuple[list[WindowReport], list[DecisionEvent]]:
    """Convenience one-shot run over a whole recording."""
    config.validate_for_rate(rec.sample_rate_hz)
    pipe = Pipeline(
        config=config,
        population=population,
        ranges=ranges if ranges is not None else RunningRanges(),
        wavelet=wavelet,
        on_event=on_event,
    )
    reports = pipe.run(rec)
    return reports, pipe.events
