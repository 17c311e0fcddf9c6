"""Neural signature generation and the 165-bit packed codec.

A signature condenses one window into 8 local values (16 bit each, the
per-frame coefficient energy envelope of the dominant channel), 4 global
values (8 bit each, cross-channel aggregates at t and t+delta) and 5 control
bits split 2/2/1 into priority, ordering and control strings.

Packed layout, bit 0 = LSB of byte 0:
  [0,128)   local values, field i at bits [16*i, 16*i+16), little-endian
  [128,160) global values, field j at bits [128+8*j, ...+8)
  [160,162) priority bits
  [162,164) ordering bits
  [164]     control bit
  [165,168) zero padding
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import EngineConfig
from .conditioning import ConditionedWindow, approximation_coeffs
from .errors import SentinelError, ValidationError

N_LOCAL = 8
N_GLOBAL = 4
DIM = N_LOCAL + N_GLOBAL
LOCAL_MAX = 0xFFFF
GLOBAL_MAX = 0xFF
PACKED_BYTES = 21


@dataclass(frozen=True)
class Signature:
    local_values: tuple[int, ...]
    global_values: tuple[int, ...]
    priority_bits: int = 0
    ordering_bits: int = 0
    control_bit: int = 0

    def __post_init__(self):
        if len(self.local_values) != N_LOCAL:
            raise ValidationError(f"need {N_LOCAL} local values")
        if len(self.global_values) != N_GLOBAL:
            raise ValidationError(f"need {N_GLOBAL} global values")
        if any(not (0 <= v <= LOCAL_MAX) for v in self.local_values):
            raise ValidationError("local value out of 16-bit range")
        if any(not (0 <= v <= GLOBAL_MAX) for v in self.global_values):
            raise ValidationError("global value out of 8-bit range")
        if not (0 <= self.priority_bits <= 3 and 0 <= self.ordering_bits <= 3):
            raise ValidationError("priority/ordering strings are 2 bits")
        if self.control_bit not in (0, 1):
            raise ValidationError("control string is 1 bit")

    @property
    def is_sentinel(self) -> bool:
        return (
            self.control_bit == 1
            and not any(self.local_values)
            and not any(self.global_values)
        )


SENTINEL = Signature(
    local_values=(0,) * N_LOCAL, global_values=(0,) * N_GLOBAL, control_bit=1
)


def pack(sig: Signature) -> bytes:
    word = 0
    for i, v in enumerate(sig.local_values):
        word |= v << (16 * i)
    for j, v in enumerate(sig.global_values):
        word |= v << (128 + 8 * j)
    word |= sig.priority_bits << 160
    word |= sig.ordering_bits << 162
    word |= sig.control_bit << 164
    return word.to_bytes(PACKED_BYTES, "little")


def unpack(blob: bytes) -> Signature:
    if len(blob) != PACKED_BYTES:
        raise ValidationError(f"packed signature must be {PACKED_BYTES} bytes")
    word = int.from_bytes(blob, "little")
    if word >> 165:
        raise ValidationError("padding bits must be zero")
    return Signature(
        local_values=tuple((word >> (16 * i)) & LOCAL_MAX for i in range(N_LOCAL)),
        global_values=tuple(
            (word >> (128 + 8 * j)) & GLOBAL_MAX for j in range(N_GLOBAL)
        ),
        priority_bits=(word >> 160) & 3,
        ordering_bits=(word >> 162) & 3,
        control_bit=(word >> 164) & 1,
    )


def to_hex(sig: Signature) -> str:
    return pack(sig).hex()


def from_hex(text: str) -> Signature:
    return unpack(bytes.fromhex(text.strip()))


@dataclass
class RunningRanges:
    """Per-feature min-max trackers with exponential forgetting.

    Each window the bounds relax 1% of the way toward the current value and
    snap outward immediately when exceeded, so quantization adapts to the
    wearer's amplitude without ever clipping fresh extremes.
    """

    lo: np.ndarray = field(default_factory=lambda: np.full(DIM, np.nan))
    hi: np.ndarray = field(default_factory=lambda: np.full(DIM, np.nan))
    decay: float = 0.99

    def update(self, features: np.ndarray) -> None:
        f = np.asarray(features, dtype=np.float64)
        if np.isnan(self.lo).any():
            self.lo = f.copy()
            self.hi = f.copy()
            return
        relax_lo = self.lo * self.decay + f * (1.0 - self.decay)
        relax_hi = self.hi * self.decay + f * (1.0 - self.decay)
        self.lo = np.minimum(f, relax_lo)
        self.hi = np.maximum(f, relax_hi)

    def quantize(self, features: np.ndarray) -> np.ndarray:
        """Map features onto [0,1] by the current bounds (degenerate bounds
        map to 0)."""
        f = np.asarray(features, dtype=np.float64)
        lo = np.where(np.isnan(self.lo), 0.0, self.lo)
        hi = np.where(np.isnan(self.hi), 0.0, self.hi)
        span = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(span > 0, (f - lo) / np.where(span > 0, span, 1.0), 0.0)
        return np.clip(unit, 0.0, 1.0)

    def snapshot(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "decay": self.decay}

    @classmethod
    def from_snapshot(cls, d: dict) -> "RunningRanges":
        return cls(lo=np.array(d["lo"], float), hi=np.array(d["hi"], float),
                   decay=float(d.get("decay", 0.99)))


def window_features(cond: ConditionedWindow) -> tuple[np.ndarray, int]:
    """Raw (unquantized) 12 features of a conditioned window plus the
    dominant channel index.

    Locals: mean-square approximation energy per frame of the dominant
    channel. Globals: mean adjacent energy at t, the same past the delta
    shift, peak correlation of any adjacent channel with the dominant one,
    and the spread of energy across channels.
    """
    coeffs = cond.dwt_coeffs
    if coeffs.shape[0] < 2:
        raise ValidationError("signature needs at least 2 channels")
    energy = np.sum(coeffs**2, axis=1)
    dominant = int(np.argmax(energy))

    approx = approximation_coeffs(coeffs, cond.dwt_levels)
    frames = np.array_split(approx[dominant], cond.frame_count)
    local = np.array([float(np.mean(fr**2)) if len(fr) else 0.0 for fr in frames])
    if len(local) < N_LOCAL:
        local = np.pad(local, (0, N_LOCAL - len(local)))
    elif len(local) > N_LOCAL:
        # re-bin an oversized window down to the signature width
        local = np.array([np.mean(c) for c in np.array_split(local, N_LOCAL)])

    adjacent = [c for c in range(coeffs.shape[0]) if c != dominant]
    adj = approx[adjacent]
    shift = max(1, cond.delta_shift >> cond.dwt_levels)
    mean_adj_now = float(np.mean(adj**2))
    mean_adj_shifted = float(np.mean(adj[:, shift:] ** 2)) if adj.shape[1] > shift else 0.0

    dom = approx[dominant] - approx[dominant].mean()
    dom_norm = np.linalg.norm(dom)
    best_corr = 0.0
    if dom_norm > 0:
        for row in adj:
            a = row - row.mean()
            denom = dom_norm * np.linalg.norm(a)
            if denom > 0:
                best_corr = max(best_corr, abs(float(dom @ a)) / denom)

    chan_energy = np.mean(approx**2, axis=1)
    total = float(np.mean(chan_energy))
    spread = float(np.std(chan_energy) / total) if total > 0 else 0.0

    glob = np.array([mean_adj_now, mean_adj_shifted, best_corr, spread])
    return np.concatenate([local, glob]), dominant


def generate(
    cond: ConditionedWindow,
    config: EngineConfig,
    ranges: RunningRanges,
    features: np.ndarray | None = None,
) -> Signature:
    """Quantize one window's features into a signature.

    Pure in (cond, config, ranges); callers advance ranges separately. An
    all-zero window yields the sentinel, which is never matched.
    """
    if not np.any(cond.dwt_coeffs):
        return SENTINEL
    if features is None:
        features, _ = window_features(cond)
    unit = ranges.quantize(features)
    local = tuple(int(round(v * LOCAL_MAX)) for v in unit[:N_LOCAL])
    glob = tuple(int(round(v * GLOBAL_MAX)) for v in unit[N_LOCAL:])
    return Signature(local_values=local, global_values=glob)


def dequantize(sig: Signature) -> np.ndarray:
    """The 12-dimensional unit vector a signature stands for."""
    if sig.is_sentinel:
        raise SentinelError("sentinel signature carries no vector")
    local = np.array(sig.local_values, dtype=np.float64) / LOCAL_MAX
    glob = np.array(sig.global_values, dtype=np.float64) / GLOBAL_MAX
    return np.concatenate([local, glob])


def quantize_vector(vec: np.ndarray) -> Signature:
    """Nearest representable signature for a unit vector (inverse of
    dequantize on representable points)."""
    v = np.asarray(vec, dtype=np.float64)
    if v.shape != (DIM,):
        raise ValidationError(f"vector must have dimension {DIM}")
    if np.any(v < 0) or np.any(v > 1):
        raise ValidationError("vector components must lie in [0,1]")
    local = tuple(int(round(x * LOCAL_MAX)) for x in v[:N_LOCAL])
    glob = tuple(int(round(x * GLOBAL_MAX)) for x in v[N_LOCAL:])
    return Signature(local_values=local, global_values=glob)
