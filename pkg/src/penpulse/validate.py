"""Comparison of detected beats against an ECG reference.

Beats are matched one-to-one in time order, then the matched timestamps and
the intervals between consecutive matches feed the similarity statistics.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass

import numpy as np

from . import stats
from .beats import BeatSeries, HeartRateSummary, summarize
from .errors import AlignmentError, ConfigError, PenpulseError, StatisticError, UsageError
from .ingest import ReferenceBeats

OFFSET_MODES = ("none", "median_shift")


@dataclass(frozen=True)
class AlignmentSpec:
    tolerance_s: float = 0.5
    global_offset_mode: str = "none"

    def __post_init__(self):
        if not (0 < self.tolerance_s < 1.5):
            raise ConfigError(f"tolerance_s must lie in (0, 1.5), got {self.tolerance_s}")
        if self.global_offset_mode not in OFFSET_MODES:
            raise ConfigError(f"global_offset_mode must be one of {OFFSET_MODES}")


@dataclass(frozen=True, eq=False)
class MatchedPairs:
    """One-to-one matches between reference and candidate beats.

    ``ref_index``/``cand_index`` locate each pair in the original series and
    ``offset_s`` is the global shift removed before matching
    (``t_ref - t_cand`` is compared against it).
    """

    t_ref: np.ndarray
    t_cand: np.ndarray
    ref_index: np.ndarray
    cand_index: np.ndarray
    n_ref: int
    n_cand: int
    offset_s: float = 0.0

    def __len__(self):
        return len(self.t_ref)

    @property
    def pairs(self):
        return list(zip(self.t_ref.tolist(), self.t_cand.tolist()))

    @property
    def unmatched_ref(self):
        return self.n_ref - len(self)

    @property
    def unmatched_cand(self):
        return self.n_cand - len(self)

    @property
    def match_rate(self):
        """Matched pairs over the larger of the two beat counts."""
        return len(self) / max(self.n_ref, self.n_cand)

    def paired_intervals(self):
        """Δt vectors from consecutive pairs that are adjacent in both series."""
        adjacent = (np.diff(self.ref_index) == 1) & (np.diff(self.cand_index) == 1)
        return np.diff(self.t_ref)[adjacent], np.diff(self.t_cand)[adjacent]


def _times(series):
    if isinstance(series, ReferenceBeats):
        return np.asarray(series.beat_times, dtype=float)
    if isinstance(series, BeatSeries):
        return np.asarray(series.beat_times_s, dtype=float)
    return np.asarray(series, dtype=float)


def _nearest(sorted_times, t):
    pos = bisect.bisect_left(sorted_times, t)
    best = None
    for j in (pos - 1, pos):
        if 0 <= j < len(sorted_times):
            if best is None or abs(sorted_times[j] - t) < abs(sorted_times[best] - t):
                best = j
    return best


def align(reference, candidate, spec=AlignmentSpec()):
    """Greedy time-ordered nearest-neighbour matching within a tolerance.

    Walking the reference in order, each beat takes the nearest not-yet-used
    candidate that lies after the previous match and within
    ``spec.tolerance_s`` (after removing the global offset, if requested).

    Raises
    ------
    AlignmentError
        No pair could be formed.
    """
    ref = _times(reference)
    cand = _times(candidate)
    if len(ref) == 0 or len(cand) == 0:
        raise UsageError("align needs two non-empty beat series")
    cand_list = cand.tolist()

    offset = 0.0
    if spec.global_offset_mode == "median_shift":
        diffs = [r - cand_list[_nearest(cand_list, r)] for r in ref.tolist()]
        offset = float(np.median(diffs))

    tol = spec.tolerance_s
    pairs = []
    lo = 0
    for i, r in enumerate(ref.tolist()):
        target = r - offset
        start = max(lo, bisect.bisect_left(cand_list, target - tol))
        best = None
        j = start
        while j < len(cand_list) and cand_list[j] <= target + tol:
            d = abs(cand_list[j] - target)
            if d <= tol and (best is None or d < best[0]):
                best = (d, j)
            j += 1
        if best is not None:
            pairs.append((i, best[1]))
            lo = best[1] + 1

    if not pairs:
        raise AlignmentError(f"no candidate beat within {tol} s of any reference beat")
    ri = np.array([p[0] for p in pairs], dtype=int)
    ci = np.array([p[1] for p in pairs], dtype=int)
    return MatchedPairs(ref[ri], cand[ci], ri, ci, len(ref), len(cand), offset)


def _paired_vectors(x, y, min_len, name):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise UsageError(f"{name} needs two 1-D vectors of equal length")
    if len(x) < min_len:
        raise UsageError(f"{name} needs at least {min_len} values, got {len(x)}")
    return x, y


def _clamp_unit(v):
    return max(-1.0, min(1.0, v))


def pearson(x, y):
    """Sample Pearson correlation coefficient."""
    x, y = _paired_vectors(x, y, 3, "pearson")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise StatisticError("correlation undefined for a constant vector")
    return _clamp_unit(float(xc @ yc) / math.sqrt(sxx * syy))


def cosine_similarity(x, y):
    x, y = _paired_vectors(x, y, 1, "cosine_similarity")
    nx = float(x @ x)
    ny = float(y @ y)
    if nx == 0.0 or ny == 0.0:
        raise StatisticError("cosine similarity undefined for a zero vector")
    return _clamp_unit(float(x @ y) / math.sqrt(nx * ny))


def mse(a, b):
    """Mean squared difference of two paired vectors."""
    a, b = _paired_vectors(a, b, 1, "mse")
    d = a - b
    return float(d @ d) / len(d)


welch_t_test = stats.welch_t_test
student_t_test = stats.student_t_test


@dataclass(frozen=True)
class FiveNumber:
    """Boxplot summary; quartiles interpolate linearly between order statistics."""

    min: float
    q1: float
    median: float
    q3: float
    max: float

    @classmethod
    def of(cls, values):
        v = np.asarray(values, dtype=float)
        if len(v) == 0:
            raise StatisticError("five-number summary of an empty vector")
        q = np.percentile(v, [0, 25, 50, 75, 100], method="linear")
        return cls(*(float(x) for x in q))

    def to_dict(self):
        return {"min": self.min, "q1": self.q1, "median": self.median, "q3": self.q3, "max": self.max}


@dataclass(frozen=True)
class ValidationReport:
    pearson_r: float
    cosine_similarity: float
    welch_p: float
    student_p: float
    mse_dt: float
    match_rate: float
    ref_summary: HeartRateSummary
    cand_summary: HeartRateSummary
    boxplot_ref: FiveNumber
    boxplot_cand: FiveNumber
    n_pairs: int = 0
    unmatched_ref: int = 0
    unmatched_cand: int = 0
    offset_s: float = 0.0
    welch_t: float = 0.0
    student_t: float = 0.0

    def to_dict(self):
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out[name] = v.to_dict() if hasattr(v, "to_dict") else v
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        for k in ("ref_summary", "cand_summary"):
            kw[k] = HeartRateSummary.from_dict(kw[k])
        for k in ("boxplot_ref", "boxplot_cand"):
            kw[k] = FiveNumber(**kw[k])
        return cls(**kw)


def _labeled(name, fn, *args):
    try:
        return fn(*args)
    except PenpulseError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def build_report(reference, candidate, spec=AlignmentSpec()):
    """Align the two series and compute every comparison statistic.

    Pearson and cosine use matched timestamps.  The t-tests and MSE use Δt
    between consecutive matches that are adjacent in both series.  Summaries
    and boxplots use each series' full Δt vector.
    """
    ref_series = BeatSeries(_times(reference))
    cand_series = candidate if isinstance(candidate, BeatSeries) else BeatSeries(_times(candidate))

    matched = _labeled("align", align, ref_series, cand_series, spec)
    r = _labeled("pearson", pearson, matched.t_ref, matched.t_cand)
    cos = _labeled("cosine_similarity", cosine_similarity, matched.t_ref, matched.t_cand)
    dt_ref, dt_cand = matched.paired_intervals()
    welch = _labeled("welch_t_test", stats.t_test, dt_ref, dt_cand, False)
    student = _labeled("student_t_test", stats.t_test, dt_ref, dt_cand, True)
    err = _labeled("mse", mse, dt_ref, dt_cand)

    return ValidationReport(
        pearson_r=r,
        cosine_similarity=cos,
        welch_p=welch.p_value,
        student_p=student.p_value,
        mse_dt=err,
        match_rate=matched.match_rate,
        ref_summary=_labeled("ref_summary", summarize, ref_series),
        cand_summary=_labeled("cand_summary", summarize, cand_series),
        boxplot_ref=_labeled("boxplot_ref", FiveNumber.of, ref_series.intervals_s),
        boxplot_cand=_labeled("boxplot_cand", FiveNumber.of, cand_series.intervals_s),
        n_pairs=len(matched),
        unmatched_ref=matched.unmatched_ref,
        unmatched_cand=matched.unmatched_cand,
        offset_s=matched.offset_s,
        welch_t=welch.statistic,
        student_t=student.statistic,
    )


def pairs_csv(matched):
    return "t_ref_s,t_cand_s\n" + "".join(f"{a!r},{b!r}\n" for a, b in matched.pairs)


def boxplot_csv(ref_dt, cand_dt):
    """Long-format Δt rows tagged ``ecg`` or ``pen``."""
    rows = (
        f"{source},{float(v)!r}\n"
        for source, values in (("ecg", ref_dt), ("pen", cand_dt))
        for v in np.asarray(values, dtype=float)
    )
    return "source,dt_s\n" + "".join(rows)
