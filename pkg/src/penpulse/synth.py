"""Synthetic pen-accelerometer traces with known beat times.

Each beat adds a Gaussian bump along a fixed direction on top of 1 g of
gravity, band-limited "writing motion" noise and white sensor noise.  The
pulse is a smooth bump, not a physiological BCG waveform; it is meant for
exercising the pipeline against exact ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .ingest import RawTrace, ScaleSpec, to_counts, write_accel_csv, write_reference

MIN_RR_S = 0.25
# g per count used when writing synthetic files
DEFAULT_COUNTS_TO_G = 0.000244

GRAVITY_G = np.array([0.0, 0.6, 0.8])
PULSE_DIRECTION = np.array([0.36, 0.48, 0.8])

_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters.

    ``pulse_width_s`` is the full width at half maximum of each bump.
    ``writing_motion_amplitude_g`` and ``noise_std_g`` are per-axis RMS
    values.  ``dropout_fraction`` removes that share of pulses from the
    signal while keeping them in the truth log.
    """

    duration_s: float = 300.0
    sample_rate_hz: float = 100.0
    mean_hr_bpm: float = 72.0
    hrv_std_s: float = 0.03
    pulse_amplitude_g: float = 0.01
    pulse_width_s: float = 0.3
    writing_motion_amplitude_g: float = 0.01
    writing_motion_band_hz: tuple = (3.0, 8.0)
    noise_std_g: float = 0.002
    dropout_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ConfigError("sample_rate_hz must be positive")
        if not self.mean_hr_bpm > 0:
            raise ConfigError("mean_hr_bpm must be positive")
        if self.hrv_std_s < 0:
            raise ConfigError("hrv_std_s must be non-negative")
        if not 60.0 / self.mean_hr_bpm > 4 * self.hrv_std_s:
            raise ConfigError("mean RR must exceed 4 x hrv_std_s")
        for name in ("pulse_amplitude_g", "writing_motion_amplitude_g", "noise_std_g"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not self.pulse_width_s > 0:
            raise ConfigError("pulse_width_s must be positive")
        lo, hi = self.writing_motion_band_hz
        if not (0 <= lo < hi):
            raise ConfigError(f"bad writing motion band {self.writing_motion_band_hz}")
        if not (0 <= self.dropout_fraction < 1):
            raise ConfigError("dropout_fraction must lie in [0, 1)")

    @property
    def mean_rr_s(self):
        return 60.0 / self.mean_hr_bpm


PRESETS = {
    "default": SynthSpec(),
    "clean": SynthSpec(writing_motion_amplitude_g=0.0, noise_std_g=0.0005),
}


def preset(name, **overrides):
    try:
        base = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown synth preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides)


@dataclass(frozen=True, eq=False)
class SynthTrace:
    trace: RawTrace
    truth_beats: np.ndarray
    dropped_beats: np.ndarray

    @property
    def truth_rr(self):
        return np.diff(self.truth_beats)


def _band_noise(rng, n, fs, band, rms):
    if rms == 0 or n < 2:
        return np.zeros(n)
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    x = np.fft.irfft(spectrum, n)
    std = x.std()
    return x * (rms / std) if std > 0 else x


def _beat_times(rng, spec):
    end = spec.duration_s - spec.pulse_width_s
    beats = []
    t = 0.0
    while True:
        rr = spec.mean_rr_s + spec.hrv_std_s * rng.standard_normal() if spec.hrv_std_s else spec.mean_rr_s
        t += max(MIN_RR_S, rr)
        if t > end:
            break
        beats.append(t)
    return np.array(beats)


def generate(spec=SynthSpec()):
    """Build a trace in g together with its ground-truth beat log.

    A fixed ``spec.seed`` gives bit-identical output.
    """
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs

    beats = _beat_times(rng, spec)
    n_drop = int(round(spec.dropout_fraction * len(beats)))
    dropped = np.sort(rng.choice(len(beats), size=n_drop, replace=False)) if n_drop else np.array([], dtype=int)
    keep = np.ones(len(beats), dtype=bool)
    keep[dropped] = False

    sigma = spec.pulse_width_s / _FWHM_PER_SIGMA
    half = int(math.ceil(6 * sigma * fs))
    pulse = np.zeros(n)
    for tb in beats[keep]:
        c = int(round(tb * fs))
        lo, hi = max(0, c - half), min(n, c + half + 1)
        seg = t[lo:hi] - tb
        pulse[lo:hi] += spec.pulse_amplitude_g * np.exp(-0.5 * (seg / sigma) ** 2)

    axes = GRAVITY_G[None, :] + pulse[:, None] * PULSE_DIRECTION[None, :]
    for k in range(3):
        axes[:, k] += _band_noise(rng, n, fs, spec.writing_motion_band_hz, spec.writing_motion_amplitude_g)
    if spec.noise_std_g > 0:
        axes += spec.noise_std_g * rng.standard_normal((n, 3))

    trace = RawTrace(fs, t, axes[:, 0], axes[:, 1], axes[:, 2], units="g")
    return SynthTrace(trace, beats, beats[dropped] if n_drop else np.array([]))


def write_files(synth, accel_path, reference_path, counts_to_g=DEFAULT_COUNTS_TO_G):
    """Write the accelerometer CSV (quantized to counts) and the truth beat file."""
    write_accel_csv(to_counts(synth.trace, ScaleSpec(counts_to_g)), accel_path)
    write_reference(synth.truth_beats, reference_path)
