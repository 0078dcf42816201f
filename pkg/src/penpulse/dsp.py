"""Magnitude fusion and Butterworth low-pass filtering.

Filters are designed from the analog Butterworth prototype by the bilinear
transform with the cutoff prewarped, and realized as a cascade of
second-order sections normalized to unit DC gain.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from scipy import signal as _sps

from .errors import ConfigError, DesignError, UsageError

FilterMode = Literal["zero_phase", "causal"]
FILTER_MODES = ("zero_phase", "causal")

# settling length used for edge reflection, in units of the 1%-decay time
SETTLING_MULTIPLE = 3
_DECAY_FRACTION = 0.01


@dataclass(frozen=True, eq=False)
class Signal:
    """A uniformly sampled scalar channel."""

    sample_rate_hz: float
    start_time_s: float
    values: np.ndarray

    def __post_init__(self):
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ConfigError(f"sample rate must be positive, got {self.sample_rate_hz}")
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or len(values) == 0:
            raise UsageError("signal must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise UsageError("signal contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def times(self):
        return self.start_time_s + np.arange(len(self.values)) / self.sample_rate_hz

    def replace_values(self, values):
        return Signal(self.sample_rate_hz, self.start_time_s, values)


@dataclass(frozen=True)
class FilterSpec:
    order: int = 4
    cutoff_hz: float = 2.0
    mode: str = "zero_phase"

    def __post_init__(self):
        if not (isinstance(self.order, (int, np.integer)) and 1 <= self.order <= 8):
            raise ConfigError(f"filter order must be an integer in [1, 8], got {self.order!r}")
        if not (math.isfinite(self.cutoff_hz) and self.cutoff_hz > 0):
            raise ConfigError(f"cutoff must be positive, got {self.cutoff_hz}")
        if self.mode not in FILTER_MODES:
            raise ConfigError(f"filter mode must be one of {FILTER_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class FilterRealization:
    """Cascade of biquads ``(b0, b1, b2, a1, a2)`` with ``a0 = 1``."""

    second_order_sections: tuple
    design_sample_rate_hz: float

    @property
    def sos(self):
        """Sections in the ``(b0, b1, b2, 1, a1, a2)`` row layout of scipy."""
        return np.array([[b0, b1, b2, 1.0, a1, a2] for b0, b1, b2, a1, a2 in self.second_order_sections])

    def frequency_response(self, freqs_hz):
        """Complex response evaluated directly on the unit circle."""
        f = np.asarray(freqs_hz, dtype=float)
        zinv = np.exp(-2j * np.pi * f / self.design_sample_rate_hz)
        h = np.ones_like(zinv)
        for b0, b1, b2, a1, a2 in self.second_order_sections:
            h = h * (b0 + b1 * zinv + b2 * zinv**2) / (1.0 + a1 * zinv + a2 * zinv**2)
        return h

    def magnitude_response(self, freqs_hz):
        return np.abs(self.frequency_response(freqs_hz))

    def poles(self):
        out = []
        for _, _, _, a1, a2 in self.second_order_sections:
            out.extend(r for r in np.roots([1.0, a1, a2]) if not (a2 == 0 and r == 0))
        return np.array(out)

    def impulse_response(self, n):
        x = np.zeros(n)
        x[0] = 1.0
        return _sps.sosfilt(self.sos, x)

    @cached_property
    def decay_samples(self):
        """Samples until the impulse response stays below 1% of its peak."""
        n = 256
        while True:
            h = np.abs(self.impulse_response(n))
            peak = h.max()
            above = np.nonzero(h >= _DECAY_FRACTION * peak)[0]
            last = int(above[-1])
            # keep doubling until the window extends well past the last crossing
            if last < n // 2 or n >= 1 << 22:
                return last + 1
            n *= 2

    @property
    def settling_samples(self):
        return SETTLING_MULTIPLE * self.decay_samples


def magnitude(trace):
    """Euclidean norm of the three axes, sample by sample."""
    if trace.units != "g":
        raise UsageError(f"magnitude expects a trace rescaled to g, got units {trace.units!r}")
    values = np.sqrt(trace.ax**2 + trace.ay**2 + trace.az**2)
    return Signal(trace.sample_rate_hz, float(trace.t[0]), values)


def design_butterworth(spec, sample_rate_hz):
    """Design a Butterworth low-pass as unit-DC-gain second-order sections.

    Parameters
    ----------
    spec : FilterSpec
        Order and cutoff; the mode is not used here.
    sample_rate_hz : float
        Rate the filter will run at.

    Returns
    -------
    FilterRealization
        ``ceil(order / 2)`` sections, the first-order one (odd orders) first.

    Raises
    ------
    DesignError
        If the cutoff is not strictly below Nyquist.
    """
    fs = float(sample_rate_hz)
    if not (fs > 0 and math.isfinite(fs)):
        raise DesignError(f"sample rate must be positive, got {sample_rate_hz}")
    fc = float(spec.cutoff_hz)
    if fc >= fs / 2:
        raise DesignError(f"cutoff {fc} Hz is not below Nyquist ({fs / 2} Hz)")
    n = int(spec.order)

    k = 2.0 * fs
    wa = k * math.tan(math.pi * fc / fs)

    sections = []
    if n % 2:
        zr = (k - wa) / (k + wa)
        a1 = -zr
        g = (1.0 + a1) / 2.0
        sections.append((g, g, 0.0, a1, 0.0))
    # upper-half-plane poles, lowest Q first
    for i in range(n // 2):
        theta = math.pi * (2 * i + 1 + n) / (2 * n)
        p = wa * cmath.exp(1j * theta)
        z = (k + p) / (k - p)
        a1 = -2.0 * z.real
        a2 = abs(z) ** 2
        g = (1.0 + a1 + a2) / 4.0
        sections.append((g, 2.0 * g, g, a1, a2))
    sections.sort(key=lambda s: s[4])
    sections = tuple(tuple(float(c) for c in s) for s in sections)

    realization = FilterRealization(sections, fs)
    if np.any(np.abs(realization.poles()) >= 1.0):
        raise DesignError("designed filter is unstable")
    return realization


def _mirror_extend(x, pad):
    # even reflection about the end samples; an odd reflection would pivot
    # on a single noisy endpoint and bias the whole extension
    if pad == 0:
        return x
    return np.concatenate([x[pad:0:-1], x, x[-2:-pad - 2:-1]])


def apply_filter(signal, realization, mode="zero_phase"):
    """Run ``signal`` through the cascade.

    ``causal`` is a single forward pass from zero state.  ``zero_phase``
    removes the mean, mirrors both ends over the filter's
    settling length, runs forward then backward, trims, and restores the mean.
    """
    fs = signal.sample_rate_hz
    if abs(fs - realization.design_sample_rate_hz) > 1e-9 * fs:
        raise UsageError(
            f"signal sampled at {fs} Hz but filter designed for "
            f"{realization.design_sample_rate_hz} Hz"
        )
    if mode not in FILTER_MODES:
        raise UsageError(f"unknown filter mode {mode!r}")
    x = np.asarray(signal.values, dtype=float)
    sos = realization.sos
    if mode == "causal":
        return signal.replace_values(_sps.sosfilt(sos, x))

    mean = float(np.mean(x))
    centered = x - mean
    n = len(x)
    pad = min(realization.settling_samples, n - 1)
    ext = _mirror_extend(centered, pad)
    y = _sps.sosfilt(sos, ext)
    y = _sps.sosfilt(sos, y[::-1])[::-1]
    return signal.replace_values(y[pad:pad + n] + mean)


def lowpass(signal, spec):
    """Design for ``signal``'s rate and apply in ``spec.mode``."""
    return apply_filter(signal, design_butterworth(spec, signal.sample_rate_hz), spec.mode)


def response_table(realization, n_points=512):
    """Rows ``(freq_hz, magnitude, phase_rad)`` from DC to Nyquist."""
    freqs = np.linspace(0.0, realization.design_sample_rate_hz / 2, n_points)
    h = realization.frequency_response(freqs)
    return np.column_stack([freqs, np.abs(h), np.angle(h)])


def response_csv(realization, n_points=512):
    rows = response_table(realization, n_points)
    return "freq_hz,magnitude,phase_rad\n" + "".join(
        f"{float(f)!r},{float(m)!r},{float(p)!r}\n" for f, m, p in rows
    )


def signal_csv(signal):
    return "t_s,value\n" + "".join(
        f"{float(t)!r},{float(v)!r}\n" for t, v in zip(signal.times, signal.values)
    )
