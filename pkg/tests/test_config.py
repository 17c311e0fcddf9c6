import pytest

from preictal.config import EngineConfig
from preictal.errors import ConfigError


def test_defaults_are_valid():
    cfg = EngineConfig()
    cfg.validate()
    assert (cfg.td, cfg.tp, cfg.duration_required) == (0.23, 0.09, 3)
    assert (cfg.band_low_hz, cfg.band_high_hz, cfg.gain) == (30.0, 100.0, 100.0)
    assert (cfg.w, cfg.ar_order, cfg.dwt_levels) == (8, 6, 3)


@pytest.mark.parametrize("field,value", [
    ("td", 0.0), ("td", 1.0), ("tp", -0.1), ("tp", 2.0),
    ("duration_required", 0), ("gamma_s", 0.0), ("gain", -1.0),
    ("w", 0), ("artifact_threshold", 1.0), ("ar_order", 0), ("dwt_levels", 0),
])
def test_bad_field_rejected(field, value):
    with pytest.raises(ConfigError):
        EngineConfig(**{field: value}).validate()


def test_band_checked_against_nyquist_at_bind_time():
    cfg = EngineConfig(band_low_hz=30, band_high_hz=130)
    cfg.validate()  # fine in the abstract
    with pytest.raises(ConfigError):
        cfg.validate_for_rate(250)
    cfg.validate_for_rate(500)


def test_dwt_depth_checked_against_window_at_bind_time():
    cfg = EngineConfig(dwt_levels=4)
    with pytest.raises(ConfigError):
        cfg.validate_for_rate(250)  # 1000 samples not divisible by 16
    cfg.validate_for_rate(500)  # 2000 samples are


def test_window_geometry():
    cfg = EngineConfig()
    assert cfg.frame_samples(250) == 125
    assert cfg.window_samples(250) == 1000
    assert cfg.window_samples(500) == 2000


def test_version_bump_and_roundtrip():
    cfg = EngineConfig()
    new = cfg.with_updates(td=0.3)
    assert new.version == 2
    assert EngineConfig.from_dict(new.to_dict()) == new
