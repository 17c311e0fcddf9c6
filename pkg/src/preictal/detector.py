"""Seizure detection: cross-channel synchronization statistic, adaptive
error threshold, and the duration-gated likelihood comparator.

The pairwise statistic is the absolute Pearson correlation between short-bin
energy envelopes of two channels. Synchronized ictal bursts co-modulate the
envelopes of every channel, while background noise decorrelates them, so the
max off-diagonal entry is a bounded [0,1] likelihood of a seizure being
underway in the window.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .conditioning import ConditionedWindow
from .errors import ValidationError

# energy bin width: 20 ms of samples, 50 bins per second
ENERGY_BINS_PER_SECOND = 50


@dataclass
class LikelihoodMatrix:
    n: int
    values: np.ndarray  # (n, n), symmetric, unit diagonal
    degenerate: np.ndarray | None = None  # zero-variance channel flags


@dataclass
class AdaptiveThreshold:
    """Rolling mean of squared prediction errors scaled by gamma.

    The ring holds the last window_n squared errors; the threshold is exactly
    gamma_s times their mean at all times.
    """

    gamma_s: float
    window_n: int
    errors: deque = field(default_factory=deque)
    current_value: float = 0.0

    def __post_init__(self):
        if self.window_n < 1:
            raise ValidationError("window_n must be >= 1")
        self.errors = deque(self.errors, maxlen=self.window_n)
        self._recompute()

    def _recompute(self) -> None:
        if not self.errors:
            self.current_value = 0.0
        else:
            self.current_value = self.gamma_s * float(
                np.mean(np.fromiter(self.errors, dtype=np.float64))
            )

    def update(self, new_error: float) -> "AdaptiveThreshold":
        self.errors.append(float(new_error) ** 2)
        self._recompute()
        return self

    def update_many(self, new_errors: np.ndarray) -> "AdaptiveThreshold":
        for e in np.asarray(new_errors, dtype=np.float64):
            self.errors.append(float(e) ** 2)
        self._recompute()
        return self


def update_threshold(state: AdaptiveThreshold, new_error: float) -> AdaptiveThreshold:
    return state.update(new_error)


@dataclass
class DetectionState:
    td: float = 0.23
    duration_required: int = 3
    consecutive_hits: int = 0
    last_likelihood: float = 0.0


def bin_energies(block: np.ndarray, bin_samples: int) -> np.ndarray:
    """Mean squared amplitude per bin per channel; the tail partial bin is
    dropped."""
    x = np.atleast_2d(np.asarray(block, dtype=np.float64))
    n_bins = x.shape[1] // bin_samples
    if n_bins == 0:
        raise ValidationError("window shorter than one energy bin")
    trimmed = x[:, : n_bins * bin_samples]
    return (trimmed**2).reshape(x.shape[0], n_bins, bin_samples).mean(axis=2)


def sync_matrix(cond: ConditionedWindow, bin_samples: int | None = None) -> LikelihoodMatrix:
    """Pairwise |Pearson| of channel energy envelopes over the window.

    Zero-variance channels get zeroed rows/columns (flagged) so degenerate
    inputs never produce NaN entries.
    """
    block = cond.filtered
    if block.shape[0] < 2:
        raise ValidationError("need >= 2 channels")
    if bin_samples is None:
        bin_samples = max(1, cond.sample_rate_hz // ENERGY_BINS_PER_SECOND)
    env = bin_energies(block, bin_samples)
    centered = env - env.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    degenerate = norms == 0
    safe = np.where(degenerate, 1.0, norms)
    unit = centered / safe[:, None]
    corr = np.abs(unit @ unit.T)
    corr[degenerate, :] = 0.0
    corr[:, degenerate] = 0.0
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, 0.0, 1.0)
    return LikelihoodMatrix(n=block.shape[0], values=corr, degenerate=degenerate)


def combined_likelihood(matrix: LikelihoodMatrix) -> float:
    if matrix.n < 2:
        raise ValidationError("likelihood needs >= 2 channels")
    off = matrix.values[~np.eye(matrix.n, dtype=bool)]
    return float(off.max())


def detect(state: DetectionState, likelihood: float) -> str:
    """Advance the duration-gated comparator.

    Returns 'none', 'onset' (exactly on the duration_required-th consecutive
    hit) or 'ongoing'.
    """
    state.last_likelihood = likelihood
    if likelihood > state.td:
        state.consecutive_hits += 1
        if state.consecutive_hits == state.duration_required:
            return "onset"
        if state.consecutive_hits > state.duration_required:
            return "ongoing"
        return "none"
    state.consecutive_hits = 0
    return "none"
