"""Accelerometer and reference-beat file ingestion.

Accelerometer files are CSV with a ``t,ax,ay,az`` header, ``t`` in decimal
seconds and the axes in integer sensor counts.  Reference files hold either
one R-wave time per line (header ``beat_time_s``) or one RR interval in
milliseconds per line (header ``rr_ms``, preceded by a ``# start=<seconds>``
comment on the first line).
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, StructuralError, ConfigError

DEFAULT_JITTER_TOLERANCE = 0.1
DEFAULT_RR_BOUNDS = (0.2, 3.0)

ACCEL_HEADER = ("t", "ax", "ay", "az")

_START_RE = re.compile(r"^#\s*start\s*=\s*(\S+)\s*$")


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RawTrace:
    """Uniformly sampled triaxial accelerometer record.

    ``units`` is ``"counts"`` straight off the sensor and ``"g"`` after
    :func:`rescale`.  Construction validates ordering and sampling jitter;
    ``jitter_tolerance`` is the allowed deviation of each timestamp gap from
    the nominal period, as a fraction of that period.
    """

    sample_rate_hz: float
    t: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    units: str = "counts"
    jitter_tolerance: float = DEFAULT_JITTER_TOLERANCE

    def __post_init__(self):
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ConfigError(f"sample rate must be positive, got {self.sample_rate_hz}")
        for name in ("t", "ax", "ay", "az"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = len(self.t)
        if n == 0:
            raise StructuralError("empty trace")
        if not (len(self.ax) == len(self.ay) == len(self.az) == n):
            raise StructuralError("axis lengths differ from timestamp count")
        if not np.all(np.isfinite(self.t)):
            raise StructuralError("non-finite timestamps")
        gaps = np.diff(self.t)
        if np.any(gaps <= 0):
            bad = int(np.argmax(gaps <= 0)) + 1
            raise StructuralError(f"non-monotone timestamps at sample {bad}")
        if n > 1:
            period = 1.0 / self.sample_rate_hz
            worst = float(np.max(np.abs(gaps - period)))
            if worst > self.jitter_tolerance * period:
                raise StructuralError(
                    f"sampling jitter {worst:.6g} s exceeds "
                    f"{self.jitter_tolerance:.3g} of the {period:.6g} s period"
                )

    def __len__(self):
        return len(self.t)

    @property
    def axes(self):
        """The three axes stacked as an ``(n, 3)`` array."""
        return np.column_stack([self.ax, self.ay, self.az])

    def __eq__(self, other):
        if not isinstance(other, RawTrace):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.units == other.units
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("t", "ax", "ay", "az")
            )
        )


@dataclass(frozen=True)
class ScaleSpec:
    """Conversion from raw sensor counts to g.  There is no default value."""

    counts_to_g: float

    def __post_init__(self):
        if not (math.isfinite(self.counts_to_g) and self.counts_to_g > 0):
            raise ConfigError(f"counts_to_g must be positive and finite, got {self.counts_to_g}")


@dataclass(frozen=True, eq=False)
class ReferenceBeats:
    """ECG R-wave times in seconds, strictly increasing.

    ``rr_bounds`` is the physiological plausibility gate applied to every
    interval between consecutive beats; pass ``None`` to disable it.
    """

    beat_times: np.ndarray
    rr_bounds: tuple[float, float] | None = field(default=DEFAULT_RR_BOUNDS)

    def __post_init__(self):
        times = _frozen(self.beat_times)
        object.__setattr__(self, "beat_times", times)
        if times.ndim != 1 or len(times) == 0:
            raise StructuralError("reference holds no beats")
        if not np.all(np.isfinite(times)):
            raise StructuralError("non-finite beat time")
        rr = np.diff(times)
        if np.any(rr <= 0):
            raise StructuralError("non-monotone timestamps in reference")
        if self.rr_bounds is not None:
            lo, hi = self.rr_bounds
            out = (rr <= lo) | (rr >= hi)
            if np.any(out):
                i = int(np.argmax(out))
                raise StructuralError(
                    f"RR interval {rr[i]:.4g} s after beat {i} outside ({lo}, {hi}) s"
                )

    def __len__(self):
        return len(self.beat_times)

    @property
    def rr_intervals(self):
        return np.diff(self.beat_times)

    @classmethod
    def from_rr(cls, rr_s, start_s=0.0, rr_bounds=DEFAULT_RR_BOUNDS):
        """Build from RR intervals in seconds; the first beat sits at ``start_s``."""
        rr = np.asarray(rr_s, dtype=float)
        if np.any(~(rr > 0)):
            raise StructuralError("RR intervals must be positive")
        times = start_s + np.concatenate([[0.0], np.cumsum(rr)])
        return cls(times, rr_bounds=rr_bounds)


def _read_lines(path):
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read().splitlines()


def parse_accel_csv(path, sample_rate_hz, jitter_tolerance=DEFAULT_JITTER_TOLERANCE):
    """Read an accelerometer CSV into a :class:`RawTrace` in counts.

    Raises
    ------
    ParseError
        A row is malformed; the message names the 1-based line number.
    StructuralError
        The file is empty or its timestamps are not strictly increasing.
    OSError
        The file cannot be opened.
    """
    lines = _read_lines(path)
    if not lines:
        raise StructuralError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if tuple(header) != ACCEL_HEADER:
        raise ParseError(f"expected header {','.join(ACCEL_HEADER)!r}, got {lines[0]!r}", line=1)

    t, counts = [], []
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
        try:
            ti = float(row[0])
            axes = [int(v) for v in row[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not math.isfinite(ti):
            raise ParseError(f"non-finite time {row[0]!r}", line=lineno)
        t.append(ti)
        counts.append(axes)
    if not t:
        raise StructuralError(f"{path}: no samples")
    counts = np.array(counts, dtype=float)
    return RawTrace(
        sample_rate_hz,
        t,
        counts[:, 0],
        counts[:, 1],
        counts[:, 2],
        units="counts",
        jitter_tolerance=jitter_tolerance,
    )


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def accel_csv(trace):
    """Render a counts-valued trace in the accelerometer CSV format.

    Timestamps use ``repr`` so re-reading reproduces them exactly.
    """
    if trace.units != "counts":
        raise StructuralError("only count-valued traces can be written; see to_counts()")
    rows = (
        f"{float(ti)!r},{int(x)},{int(y)},{int(z)}\n"
        for ti, x, y, z in zip(trace.t, trace.ax, trace.ay, trace.az)
    )
    return ",".join(ACCEL_HEADER) + "\n" + "".join(rows)


def write_accel_csv(trace, path):
    _write_text(path, accel_csv(trace))


def parse_reference(path, rr_bounds=DEFAULT_RR_BOUNDS):
    """Read a reference beat file in either timestamp or RR-interval form.

    The RR form is cumulatively summed from its declared start offset, so the
    result is always a list of beat times in seconds.
    """
    lines = _read_lines(path)
    if not lines:
        raise StructuralError(f"{path}: empty file")

    start = None
    first = 0
    m = _START_RE.match(lines[0].strip())
    if m:
        try:
            start = float(m.group(1))
        except ValueError:
            raise ParseError(f"bad start offset {m.group(1)!r}", line=1) from None
        first = 1
    if first >= len(lines):
        raise StructuralError(f"{path}: missing header")
    header = lines[first].strip()
    if header == "beat_time_s":
        mode = "timestamps"
    elif header == "rr_ms":
        mode = "rr"
        if start is None:
            raise ParseError("rr_ms file needs a '# start=<seconds>' comment on line 1", line=1)
    else:
        raise ParseError(f"expected header 'beat_time_s' or 'rr_ms', got {header!r}", line=first + 1)

    values = []
    for lineno, raw in enumerate(lines[first + 1:], start=first + 2):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        try:
            v = float(s)
        except ValueError:
            raise ParseError(f"not a number: {s!r}", line=lineno) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {s!r}", line=lineno)
        values.append(v)
    if not values:
        raise StructuralError(f"{path}: no beats")

    if mode == "rr":
        if any(v <= 0 for v in values):
            raise StructuralError("negative or zero RR interval")
        return ReferenceBeats.from_rr(np.array(values) / 1000.0, start, rr_bounds=rr_bounds)
    return ReferenceBeats(values, rr_bounds=rr_bounds)


def column_csv(header, values):
    """One-column CSV with full-precision floats."""
    return header + "\n" + "".join(f"{float(v)!r}\n" for v in np.asarray(values, dtype=float))


def reference_csv(beat_times):
    return column_csv("beat_time_s", beat_times)


def rr_reference_csv(rr_ms, start_s):
    return f"# start={float(start_s)!r}\n" + column_csv("rr_ms", rr_ms)


def write_reference(beat_times, path):
    """Write beat times in the single-column ``beat_time_s`` format."""
    _write_text(path, reference_csv(beat_times))


def rescale(trace, scale):
    """Multiply every axis by ``scale.counts_to_g``; timestamps are untouched."""
    k = scale.counts_to_g
    return RawTrace(
        trace.sample_rate_hz,
        trace.t,
        trace.ax * k,
        trace.ay * k,
        trace.az * k,
        units="g",
        jitter_tolerance=trace.jitter_tolerance,
    )


def to_counts(trace, scale):
    """Quantize a g-valued trace to integer counts (inverse of :func:`rescale`)."""
    k = scale.counts_to_g

    def quantize(v):
        # + 0.0 turns -0.0 into 0.0 so the values survive a CSV round trip
        return np.round(v / k) + 0.0

    return RawTrace(
        trace.sample_rate_hz,
        trace.t,
        quantize(trace.ax),
        quantize(trace.ay),
        quantize(trace.az),
        units="counts",
        jitter_tolerance=trace.jitter_tolerance,
    )
