"""Heart rate from a smart pen's accelerometer, checked against an ECG reference.

The pipeline is ``ingest`` (files to traces) -> ``dsp`` (magnitude and
Butterworth low-pass) -> ``beats`` (peak detection, Δt, heart rate) ->
``validate`` (alignment and statistics) with ``tune`` sweeping the cutoff
and ``synth`` supplying traces with known beat times.
"""

import json
from importlib import resources

from .beats import BeatSeries, DetectorSpec, HeartRateSummary, detect_beats, heart_rate, summarize
from .dsp import FilterRealization, FilterSpec, Signal, apply_filter, design_butterworth, magnitude
from .errors import (
    AlignmentError,
    ConfigError,
    DesignError,
    DetectionError,
    ParseError,
    PenpulseError,
    StatisticError,
    StructuralError,
    SweepError,
    UsageError,
)
from .ingest import RawTrace, ReferenceBeats, ScaleSpec, parse_accel_csv, parse_reference, rescale
from .stats import student_t_test, welch_t_test
from .synth import SynthSpec, SynthTrace, generate
from .tune import SweepResult, SweepSpec, sweep
from .validate import (
    AlignmentSpec,
    MatchedPairs,
    ValidationReport,
    align,
    build_report,
    cosine_similarity,
    mse,
    pearson,
)

__version__ = "0.1.0"


def load_schema(name):
    """Return a shipped JSON schema (``summary``, ``report``, ``sweep`` or ``error``)."""
    text = resources.files(__package__).joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)
