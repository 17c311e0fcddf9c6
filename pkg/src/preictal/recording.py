"""EEG recording ingest: file formats, synthetic generation, window serving.

Two on-disk formats are supported.

CSV: header line ``channels=<n>,rate=<hz>`` followed by one row per sample
instant of comma-separated signed integers. An optional sidecar ``<name>.ann``
holds one annotation per line: ``onset=<f> offset=<f> label=<s>``.

Raw binary: 16-byte header (magic ``EEG1``, u32 channels, u32 rate, u32 sample
count, little-endian) followed by channel-interleaved 16-bit little-endian
samples.

Clinical archives usually ship EDF; converting EDF to either format is a
one-liner with any EDF reader (read the signal matrix, write rows). EDF
parsing itself is deliberately not implemented here.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .config import EngineConfig
from .errors import FormatError, IntegrityError, ValidationError

VALID_RATES = (250, 500)

SEIZURE_LABELS = (
    "tonic-clonic",
    "absence",
    "myoclonic",
    "tonic",
    "clonic",
    "atonic",
    "unspecified",
)

MAGIC = b"EEG1"


@dataclass(frozen=True)
class SeizureAnnotation:
    onset_s: float
    offset_s: float
    label: str = "unspecified"

    def validate(self, duration_s: float) -> None:
        if not (0.0 <= self.onset_s < self.offset_s <= duration_s):
            raise ValidationError(
                f"annotation ({self.onset_s}, {self.offset_s}) outside recording of {duration_s}s"
            )
        if self.label not in SEIZURE_LABELS:
            raise ValidationError(f"unknown seizure label {self.label!r}")


@dataclass
class EegRecording:
    channel_count: int
    sample_rate_hz: int
    samples: np.ndarray  # int16, shape (channels, n_samples)
    annotations: list[SeizureAnnotation] = field(default_factory=list)
    subject_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.sample_rate_hz not in VALID_RATES:
            raise ValidationError(
                f"sample rate must be one of {VALID_RATES}, got {self.sample_rate_hz}"
            )
        if self.samples.ndim != 2 or self.samples.shape[0] != self.channel_count:
            raise IntegrityError(
                f"expected {self.channel_count} equal-length channels, got shape {self.samples.shape}"
            )
        if self.channel_count < 4:
            raise ValidationError("at least 4 channels required")
        if self.samples.dtype != np.int16:
            info = np.iinfo(np.int16)
            if self.samples.size and (
                self.samples.min() < info.min or self.samples.max() > info.max
            ):
                raise ValidationError("samples do not fit 16-bit signed integers")
            self.samples = self.samples.astype(np.int16)
        for ann in self.annotations:
            ann.validate(self.duration_s)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.samples.shape[1] / self.sample_rate_hz


@dataclass
class SlidingWindow:
    window_id: int
    start_sample: int
    data: np.ndarray  # float64, shape (channels, window_samples)
    delta_shift: int
    sample_rate_hz: int = 250
    padded: bool = False


def _annotation_path(path: Path) -> Path:
    return path.with_suffix(".ann")


def _parse_annotation_line(line: str, lineno: int) -> SeizureAnnotation:
    parts = line.split()
    kv = {}
    for part in parts:
        if "=" not in part:
            raise FormatError(f"annotation line {lineno}: bad token {part!r}")
        k, v = part.split("=", 1)
        kv[k] = v
    try:
        return SeizureAnnotation(
            onset_s=float(kv["onset"]),
            offset_s=float(kv["offset"]),
            label=kv.get("label", "unspecified"),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"annotation line {lineno}: {exc}") from exc


def load_annotations(path: Path) -> list[SeizureAnnotation]:
    anns = []
    for i, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        anns.append(_parse_annotation_line(line, i))
    return anns


def _load_csv(path: Path) -> tuple[int, int, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(
            item.split("=", 1) for item in header.split(",") if "=" in item
        )
        if "channels" not in fields or "rate" not in fields:
            raise FormatError(f"{path}: header must be 'channels=<n>,rate=<hz>'")
        try:
            channels = int(fields["channels"])
            rate = int(fields["rate"])
        except ValueError as exc:
            raise FormatError(f"{path}: non-integer header field") from exc
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            values = line.split(",")
            if len(values) != channels:
                raise IntegrityError(
                    f"{path}:{lineno}: expected {channels} values, got {len(values)}"
                )
            try:
                rows.append([int(v) for v in values])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer sample") from exc
    data = np.array(rows, dtype=np.int64).T if rows else np.empty((channels, 0), np.int64)
    return channels, rate, data


def _load_raw(path: Path) -> tuple[int, int, np.ndarray]:
    blob = path.read_bytes()
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated header")
    magic, channels, rate, count = struct.unpack("<4sIII", blob[:16])
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = 16 + 2 * channels * count
    if len(blob) != expected:
        raise IntegrityError(
            f"{path}: expected {expected} bytes for {channels}x{count} samples, got {len(blob)}"
        )
    flat = np.frombuffer(blob, dtype="<i2", offset=16)
    data = flat.reshape(count, channels).T  # interleaved: all channels per instant
    return channels, rate, data


def load_recording(path: str | Path, format: str | None = None) -> EegRecording:
    """Load a recording plus its sidecar annotations if present.

    ``format`` is ``csv`` or ``raw-binary``; inferred from the suffix when
    omitted (.csv vs anything else).
    """
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such file: {path}")
    if format is None:
        format = "csv" if path.suffix == ".csv" else "raw-binary"
    if format == "csv":
        channels, rate, data = _load_csv(path)
    elif format == "raw-binary":
        channels, rate, data = _load_raw(path)
    else:
        raise ValidationError(f"unknown format {format!r}")

    ann_path = _annotation_path(path)
    annotations = load_annotations(ann_path) if ann_path.exists() else []
    return EegRecording(
        channel_count=channels,
        sample_rate_hz=rate,
        samples=data,
        annotations=annotations,
        subject_meta={"source": str(path)},
    )


def write_recording(rec: EegRecording, path: str | Path, format: str | None = None) -> Path:
    """Write a recording in canonical form; returns the data file path."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix == ".csv" else "raw-binary"
    if format == "csv":
        lines = [f"channels={rec.channel_count},rate={rec.sample_rate_hz}"]
        for row in rec.samples.T:
            lines.append(",".join(str(int(v)) for v in row))
        path.write_text("\n".join(lines) + "\n")
    elif format == "raw-binary":
        header = struct.pack(
            "<4sIII", MAGIC, rec.channel_count, rec.sample_rate_hz, rec.n_samples
        )
        body = rec.samples.T.astype("<i2").tobytes()
        path.write_bytes(header + body)
    else:
        raise ValidationError(f"unknown format {format!r}")
    if rec.annotations:
        lines = [
            f"onset={ann.onset_s} offset={ann.offset_s} label={ann.label}"
            for ann in rec.annotations
        ]
        _annotation_path(path).write_text("\n".join(lines) + "\n")
    return path


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a labeled synthetic recording.

    seizure_times are onsets in seconds; each seizure lasts seizure_len_s and
    is preceded by a stereotyped pre-ictal pattern starting preictal_lead_s
    before onset. artifact_bursts are times of heavy-tailed transients, also
    recorded in subject_meta so tests can locate them.
    """

    duration_s: float = 300.0
    channel_count: int = 4
    sample_rate_hz: int = 250
    seizure_times: tuple[float, ...] = ()
    seizure_len_s: float = 20.0
    seizure_label: str = "tonic-clonic"
    preictal_lead_s: float = 14.0
    artifact_bursts: tuple[float, ...] = ()
    noise_sigma: float = 100.0
    seed: int = 0

    def validate(self) -> None:
        if self.preictal_lead_s < 0:
            raise ValidationError("preictal_lead_s must be >= 0")
        intervals = sorted(
            (t, t + self.seizure_len_s) for t in self.seizure_times
        )
        for (a0, a1), (b0, b1) in zip(intervals, intervals[1:]):
            if b0 < a1:
                raise ValidationError(
                    f"overlapping seizures at {a0}s and {b0}s"
                )
        for t in self.seizure_times:
            if t < 0 or t + self.seizure_len_s > self.duration_s:
                raise ValidationError(f"seizure at {t}s falls outside recording")


def _burst_train(t: np.ndarray, rate_hz: float, carrier_hz: float, width_s: float) -> np.ndarray:
    """Periodic bursts: a carrier gated by narrow Gaussian envelopes.

    The sharp envelope spreads energy across the pass band, which is what
    survives the front-end filter.
    """
    phase = np.mod(t, 1.0 / rate_hz)
    envelope = np.exp(-0.5 * ((phase - 0.5 / rate_hz) / width_s) ** 2)
    return envelope * np.sin(2 * np.pi * carrier_hz * t)


def generate_synthetic(spec: SynthSpec) -> EegRecording:
    """Deterministic labeled EEG: background noise, pre-ictal rhythm on the
    dominant channel, synchronized ictal bursts on all channels, optional
    heavy-tailed artifact transients."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    chans = spec.channel_count

    # independent broadband background per channel
    data = rng.normal(0.0, spec.noise_sigma, size=(chans, n))

    for onset in spec.seizure_times:
        # pre-ictal: a steady 40 Hz rhythm confined to the first channel;
        # distinctive signature without any cross-channel synchronization
        p0 = int(round((onset - spec.preictal_lead_s) * spec.sample_rate_hz))
        p1 = int(round(onset * spec.sample_rate_hz))
        p0 = max(p0, 0)
        seg = t[p0:p1]
        rhythm = np.sin(2 * np.pi * 40.0 * seg)
        data[0, p0:p1] += 8.0 * spec.noise_sigma * rhythm

        # ictal: spike-wave bursts at 3 Hz, synchronized across all channels
        s0 = p1
        s1 = min(int(round((onset + spec.seizure_len_s) * spec.sample_rate_hz)), n)
        seg = t[s0:s1]
        bursts = _burst_train(seg, rate_hz=3.0, carrier_hz=45.0, width_s=0.02)
        scales = 1.0 + 0.2 * rng.standard_normal(chans)
        for c in range(chans):
            data[c, s0:s1] += 40.0 * spec.noise_sigma * scales[c] * bursts

    for burst_t in spec.artifact_bursts:
        b0 = int(round(burst_t * spec.sample_rate_hz))
        b1 = min(b0 + spec.sample_rate_hz // 4, n)  # 250 ms transient
        if b0 >= n:
            continue
        chan = int(rng.integers(0, chans))
        burst = rng.standard_cauchy(b1 - b0).clip(-75, 75)
        data[chan, b0:b1] += 4.0 * spec.noise_sigma * burst

    info = np.iinfo(np.int16)
    samples = np.clip(np.rint(data), info.min, info.max).astype(np.int16)

    annotations = [
        SeizureAnnotation(onset_s=float(onset), offset_s=float(onset + spec.seizure_len_s),
                          label=spec.seizure_label)
        for onset in sorted(spec.seizure_times)
    ]
    meta = {
        "synthetic": True,
        "seed": spec.seed,
        "preictal_lead_s": spec.preictal_lead_s,
        "artifact_bursts": list(spec.artifact_bursts),
    }
    return EegRecording(
        channel_count=chans,
        sample_rate_hz=spec.sample_rate_hz,
        samples=samples,
        annotations=annotations,
        subject_meta=meta,
    )


def windows(rec: EegRecording, config: EngineConfig) -> Iterator[SlidingWindow]:
    """Serve consecutive non-overlapping windows of w signature units each.

    The final partial window, if any, is zero-padded and flagged; nothing is
    dropped.
    """
    win = config.window_samples(rec.sample_rate_hz)
    n = rec.n_samples
    window_id = 0
    for start in range(0, n, win):
        block = rec.samples[:, start:start + win].astype(np.float64)
        padded = block.shape[1] < win
        if padded:
            pad = np.zeros((rec.channel_count, win - block.shape[1]))
            block = np.concatenate([block, pad], axis=1)
        yield SlidingWindow(
            window_id=window_id,
            start_sample=start,
            data=block,
            delta_shift=config.delta_shift,
            sample_rate_hz=rec.sample_rate_hz,
            padded=padded,
        )
        window_id += 1
