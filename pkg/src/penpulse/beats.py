"""Heartbeat peak detection and inter-beat-interval statistics."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import peak_prominences

from .errors import ConfigError, DetectionError, UsageError
from .ingest import column_csv

# scales a median absolute deviation to a Gaussian standard deviation
MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class DetectorSpec:
    refractory_s: float = 0.33
    prominence_factor: float = 0.5
    min_duration_s: float = 0.0

    def __post_init__(self):
        if not (0.1 < self.refractory_s < 2.0):
            raise ConfigError(f"refractory_s must lie in (0.1, 2.0), got {self.refractory_s}")
        if not (self.prominence_factor > 0 and math.isfinite(self.prominence_factor)):
            raise ConfigError(f"prominence_factor must be positive, got {self.prominence_factor}")
        if not (self.min_duration_s >= 0):
            raise ConfigError(f"min_duration_s must be non-negative, got {self.min_duration_s}")


@dataclass(frozen=True, eq=False)
class BeatSeries:
    """Detected beat times and the intervals between consecutive beats."""

    beat_times_s: np.ndarray

    def __post_init__(self):
        times = np.array(self.beat_times_s, dtype=float)
        if times.ndim != 1:
            raise UsageError("beat times must be 1-D")
        if np.any(np.diff(times) <= 0):
            raise UsageError("beat times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "beat_times_s", times)
        dt = np.diff(times)
        dt.setflags(write=False)
        object.__setattr__(self, "intervals_s", dt)

    def __len__(self):
        return len(self.beat_times_s)

    def __eq__(self, other):
        if not isinstance(other, BeatSeries):
            return NotImplemented
        return np.array_equal(self.beat_times_s, other.beat_times_s)


@dataclass(frozen=True)
class HeartRateSummary:
    mean_dt_s: float
    std_dt_s: float
    mean_hr_bpm: float
    beat_count: int

    def to_dict(self):
        return {
            "mean_dt_s": self.mean_dt_s,
            "std_dt_s": self.std_dt_s,
            "mean_hr_bpm": self.mean_hr_bpm,
            "beat_count": self.beat_count,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["mean_dt_s"]), float(d["std_dt_s"]), float(d["mean_hr_bpm"]), int(d["beat_count"]))


def robust_spread(values):
    """Median absolute deviation scaled to match a Gaussian sigma."""
    v = np.asarray(values, dtype=float)
    return MAD_TO_SIGMA * float(np.median(np.abs(v - np.median(v))))


def _strict_local_maxima(x):
    return np.nonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:]))[0] + 1


def _parabolic_offset(y0, y1, y2):
    # vertex of the parabola through (-1, y0), (0, y1), (1, y2)
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return 0.0
    return min(0.5, max(-0.5, 0.5 * (y0 - y2) / denom))


def _above_half_prominence(x, idx, prominence):
    """Width in samples of the run around a peak that stays above half its prominence."""
    level = x[idx] - 0.5 * prominence
    left = idx
    while left > 0 and x[left - 1] > level:
        left -= 1
    right = idx
    while right < len(x) - 1 and x[right + 1] > level:
        right += 1
    return right - left + 1


def detect_beats(signal, spec=DetectorSpec()):
    """Find heartbeat peaks in a filtered magnitude signal.

    Candidates are strict local maxima whose topographic prominence exceeds
    ``spec.prominence_factor`` times the robust spread of the signal.  They
    are then thinned greedily, tallest first, so that no two surviving beats
    are closer than ``spec.refractory_s``.  Each survivor's time is refined
    by a three-point parabolic fit.

    Raises
    ------
    DetectionError
        Fewer than two beats survive.
    """
    x = np.asarray(signal.values, dtype=float)
    fs = signal.sample_rate_hz
    if len(x) < 3:
        raise DetectionError("insufficient beats: signal shorter than 3 samples")

    spread = robust_spread(x)
    if spread == 0.0:
        # many repeated values; fall back to the plain standard deviation
        spread = float(np.std(x))
    threshold = spec.prominence_factor * spread

    idx = _strict_local_maxima(x)
    if len(idx) and spread > 0:
        prom = peak_prominences(x, idx)[0]
        keep = prom > threshold
        idx, prom = idx[keep], prom[keep]
        if spec.min_duration_s > 0 and len(idx):
            min_samples = spec.min_duration_s * fs
            wide = np.array([_above_half_prominence(x, i, p) >= min_samples for i, p in zip(idx, prom)])
            idx = idx[wide]
    else:
        idx = idx[:0]

    times = np.array(
        [signal.start_time_s + (i + _parabolic_offset(x[i - 1], x[i], x[i + 1])) / fs for i in idx]
    )

    accepted = []
    for k in sorted(range(len(idx)), key=lambda k: (-x[idx[k]], idx[k])):
        t = times[k]
        pos = bisect.bisect_left(accepted, t)
        if pos > 0 and t - accepted[pos - 1] < spec.refractory_s:
            continue
        if pos < len(accepted) and accepted[pos] - t < spec.refractory_s:
            continue
        accepted.insert(pos, t)

    if len(accepted) < 2:
        raise DetectionError(f"insufficient beats: found {len(accepted)}")
    return BeatSeries(np.array(accepted))


def heart_rate(intervals_s):
    """Instantaneous heart rate in bpm, ``60 / Δt`` element-wise."""
    dt = np.asarray(intervals_s, dtype=float)
    if np.any(~(dt > 0)):
        raise UsageError("heart rate needs strictly positive intervals")
    return 60.0 / dt


def summarize(series):
    """Mean and sample standard deviation of Δt, and the mean heart rate.

    The standard deviation uses the ``n - 1`` denominator; with a single
    interval it is reported as 0.
    """
    if len(series) < 2:
        raise UsageError("summary needs at least 2 beats")
    dt = series.intervals_s
    mean_dt = float(np.mean(dt))
    std_dt = float(np.std(dt, ddof=1)) if len(dt) > 1 else 0.0
    return HeartRateSummary(mean_dt, std_dt, 60.0 / mean_dt, len(series))


def beats_csv(series):
    return column_csv("beat_time_s", series.beat_times_s)


def dt_csv(series):
    return column_csv("dt_s", series.intervals_s)
