"""Low-pass cutoff sweep scored against a reference beat count."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .beats import DetectorSpec, detect_beats
from .dsp import FilterSpec, apply_filter, design_butterworth
from .errors import AlignmentError, ConfigError, DetectionError, StatisticError, SweepError
from .validate import AlignmentSpec, align, pearson

SWEEP_ORDER = 4


def default_grid():
    return tuple(float(c) for c in np.round(np.arange(0.5, 5.0 + 1e-9, 0.25), 10))


def _check_grid(cutoffs, sample_rate_hz=None):
    cutoffs = tuple(float(c) for c in cutoffs)
    if not cutoffs:
        raise ConfigError("cutoff grid is empty")
    if any(not (math.isfinite(c) and c > 0) for c in cutoffs):
        raise ConfigError("cutoffs must be positive")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ConfigError("cutoff grid must be strictly increasing")
    if sample_rate_hz is not None and cutoffs[-1] >= sample_rate_hz / 2:
        raise ConfigError(f"cutoff {cutoffs[-1]} Hz is not below Nyquist ({sample_rate_hz / 2} Hz)")
    return cutoffs


@dataclass(frozen=True)
class SweepSpec:
    cutoffs_hz: tuple = field(default_factory=default_grid)
    detector: DetectorSpec = DetectorSpec()
    alignment: AlignmentSpec = AlignmentSpec()
    mode: str = "zero_phase"

    def __post_init__(self):
        object.__setattr__(self, "cutoffs_hz", _check_grid(self.cutoffs_hz))

    def check_sample_rate(self, sample_rate_hz):
        _check_grid(self.cutoffs_hz, sample_rate_hz)


@dataclass(frozen=True)
class SweepRow:
    cutoff_hz: float
    beat_count: int
    count_error: int
    pearson_r: float | None


def selection_key(row):
    """Lexicographic rank: count error, then higher correlation, then lower cutoff."""
    r = row.pearson_r if row.pearson_r is not None else -math.inf
    return (row.count_error, -r, row.cutoff_hz)


@dataclass(frozen=True)
class SweepResult:
    per_cutoff: tuple
    best_cutoff_hz: float

    def to_dict(self):
        return {
            "best_cutoff_hz": self.best_cutoff_hz,
            "per_cutoff": [
                {
                    "cutoff_hz": r.cutoff_hz,
                    "beat_count": r.beat_count,
                    "count_error": r.count_error,
                    "pearson_r": r.pearson_r,
                }
                for r in self.per_cutoff
            ],
        }


def _score(signal, ref_times, cutoff, spec):
    n_ref = len(ref_times)
    realization = design_butterworth(FilterSpec(SWEEP_ORDER, cutoff, spec.mode), signal.sample_rate_hz)
    filtered = apply_filter(signal, realization, spec.mode)
    try:
        found = detect_beats(filtered, spec.detector)
    except DetectionError:
        return SweepRow(cutoff, 0, n_ref, None)
    r = None
    try:
        matched = align(ref_times, found, spec.alignment)
        r = pearson(matched.t_ref, matched.t_cand)
    except (AlignmentError, StatisticError, ValueError):
        pass
    return SweepRow(cutoff, len(found), abs(len(found) - n_ref), r)


def sweep(signal, reference, spec=SweepSpec(), workers=1):
    """Score every cutoff in ``spec.cutoffs_hz`` and pick the best.

    Each cutoff runs the order-4 design, filtering, detection and alignment.
    A cutoff whose detection fails is recorded with ``count_error`` equal to
    the reference beat count and no correlation.

    Raises
    ------
    SweepError
        Detection failed at every cutoff.
    """
    spec.check_sample_rate(signal.sample_rate_hz)
    ref_times = np.asarray(getattr(reference, "beat_times", reference), dtype=float)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda c: _score(signal, ref_times, c, spec), spec.cutoffs_hz))
    else:
        rows = [_score(signal, ref_times, c, spec) for c in spec.cutoffs_hz]

    if all(r.beat_count == 0 for r in rows):
        raise SweepError("beat detection failed at every cutoff")
    best = min(rows, key=selection_key)
    return SweepResult(tuple(rows), best.cutoff_hz)


def sweep_csv(result):
    """Sweep table; a failed cutoff leaves ``pearson_r`` empty."""
    lines = ["cutoff_hz,beat_count,count_error,pearson_r"]
    for r in result.per_cutoff:
        pr = "" if r.pearson_r is None else repr(float(r.pearson_r))
        lines.append(f"{r.cutoff_hz!r},{r.beat_count},{r.count_error},{pr}")
    return "\n".join(lines) + "\n"
