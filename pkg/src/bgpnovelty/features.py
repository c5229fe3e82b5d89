"""Normalized lag-window vectors for training and scoring.

A window ending at minute t holds the k most recent per-minute counts of
each channel, scaled by the training range: k announcement lags
(oldest first) followed by k withdrawal lags (oldest first), 2k values in
total. Normalization is per channel — every lag position of a channel is a
sample of the same process — and deliberately does not clamp: values beyond
the training envelope mapping outside [0, 1] are exactly the signal the
detector looks for.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .series import MinuteSeries


class EmptySeries(ValueError):
    pass


@dataclass(frozen=True)
class NormalizationParams:
    """Per-channel min/max bounds taken from the training range."""

    a_min: float
    a_max: float
    w_min: float
    w_max: float

    def __post_init__(self):
        if self.a_max < self.a_min or self.w_max < self.w_min:
            raise ValueError("normalization bounds must satisfy max >= min")


@dataclass(frozen=True)
class WindowSample:
    """One 2k-dimensional lag vector; ``end_minute_s`` is inclusive."""

    end_minute_s: int
    values: np.ndarray = field(repr=False)


def fit_normalization(series: MinuteSeries) -> NormalizationParams:
    """Per-channel min/max over the given (training) series."""
    if len(series) == 0:
        raise EmptySeries("cannot fit normalization on an empty series")
    return NormalizationParams(
        a_min=float(series.announcements.min()),
        a_max=float(series.announcements.max()),
        w_min=float(series.withdrawals.min()),
        w_max=float(series.withdrawals.max()),
    )


def normalize(value: float, lo: float, hi: float) -> float:
    """Linear map of [lo, hi] onto [0, 1]; no clamping outside the range.

    A degenerate range (hi == lo) maps everything to 0.0.
    """
    if hi < lo:
        raise ValueError(f"bad normalization range: [{lo}, {hi}]")
    if hi == lo:
        return 0.0
    return (value - lo) / (hi - lo)


def denormalize(value: float, lo: float, hi: float) -> float:
    """Inverse of :func:`normalize` for hi > lo."""
    if hi < lo:
        raise ValueError(f"bad normalization range: [{lo}, {hi}]")
    return lo + value * (hi - lo)


def _normalize_array(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return np.zeros(values.shape, dtype=np.float64)
    return (values.astype(np.float64) - lo) / (hi - lo)


def make_windows(
    series: MinuteSeries,
    k: int,
    params: NormalizationParams,
) -> list[WindowSample]:
    """Overlapping stride-1 windows, one per minute from index k-1 onward.

    The window ending at minute t covers minutes t-k+1 .. t (current minute
    included). A series shorter than k yields no windows.
    """
    if k < 1:
        raise ValueError(f"lag count k must be >= 1, got {k}")
    n = len(series)
    if n < k:
        return []
    ann = _normalize_array(series.announcements, params.a_min, params.a_max)
    wd = _normalize_array(series.withdrawals, params.w_min, params.w_max)
    ann_lags = np.lib.stride_tricks.sliding_window_view(ann, k)
    wd_lags = np.lib.stride_tricks.sliding_window_view(wd, k)
    values = np.hstack([ann_lags, wd_lags])
    return [
        WindowSample(series.minute_at(k - 1 + i), values[i].copy())
        for i in range(n - k + 1)
    ]


def window_matrix(windows: Sequence[WindowSample]) -> np.ndarray:
    """Stack window values into a float64 matrix of shape (n_windows, 2k)."""
    if len(windows) == 0:
        return np.zeros((0, 0), dtype=np.float64)
    return np.stack([w.values for w in windows]).astype(np.float64, copy=False)
