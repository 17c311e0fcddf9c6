"""Engine configuration: every live-tunable knob in one dataclass.

A config revision is immutable once bound to a window; the pipeline swaps
configs only at window boundaries so no window is ever evaluated under a
mixture of two revisions.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import ConfigError


@dataclass(frozen=True)
class EngineConfig:
    td: float = 0.23                # detection likelihood threshold
    tp: float = 0.09                # prediction score threshold
    duration_required: int = 3      # consecutive hit windows before an onset fires
    gamma_s: float = 1.5            # scaling factor of the adaptive error threshold
    band_low_hz: float = 30.0
    band_high_hz: float = 100.0
    gain: float = 100.0
    w: int = 8                      # signature units per window
    delta_shift: int = 8            # sample shift for adjacent-channel features
    artifact_threshold: float = 0.6
    ar_order: int = 6
    dwt_levels: int = 3
    version: int = 1

    def validate(self) -> None:
        if not (0.0 < self.td < 1.0):
            raise ConfigError(f"td must be in (0,1), got {self.td}")
        if not (0.0 < self.tp < 1.0):
            raise ConfigError(f"tp must be in (0,1), got {self.tp}")
        if self.duration_required < 1:
            raise ConfigError("duration_required must be >= 1")
        if self.gamma_s <= 0:
            raise ConfigError("gamma_s must be positive")
        if not (0.0 <= self.band_low_hz < self.band_high_hz):
            raise ConfigError(
                f"band must satisfy 0 <= low < high, got ({self.band_low_hz}, {self.band_high_hz})"
            )
        if self.gain <= 0:
            raise ConfigError("gain must be positive")
        if self.w < 1:
            raise ConfigError("w must be >= 1")
        if self.delta_shift < 0:
            raise ConfigError("delta_shift must be >= 0")
        if not (0.0 < self.artifact_threshold < 1.0):
            raise ConfigError("artifact_threshold must be in (0,1)")
        if self.ar_order < 1:
            raise ConfigError("ar_order must be >= 1")
        if self.dwt_levels < 1:
            raise ConfigError("dwt_levels must be >= 1")

    def validate_for_rate(self, sample_rate_hz: int) -> None:
        """Checks that only make sense once bound to a concrete recording."""
        self.validate()
        nyquist = sample_rate_hz / 2.0
        if self.band_high_hz >= nyquist:
            raise ConfigError(
                f"band high edge {self.band_high_hz} Hz >= Nyquist {nyquist} Hz"
            )
        window = self.window_samples(sample_rate_hz)
        if window % (1 << self.dwt_levels) != 0:
            raise ConfigError(
                f"window of {window} samples is not divisible by 2^{self.dwt_levels}"
            )

    def frame_samples(self, sample_rate_hz: int) -> int:
        # one signature unit spans half a second
        return sample_rate_hz // 2

    def window_samples(self, sample_rate_hz: int) -> int:
        return self.w * self.frame_samples(sample_rate_hz)

    def with_updates(self, **kwargs) -> "EngineConfig":
        """New revision with the given fields changed and version bumped."""
        known = {f.name for f in fields(self)}
        unknown = set(kwargs) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs.setdefault("version", self.version + 1)
        new = replace(self, **kwargs)
        new.validate()
        return new

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg
