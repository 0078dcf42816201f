import math

import numpy as np
import pytest
from scipy import signal as sps

from penpulse import dsp
from penpulse.errors import ConfigError, DesignError, UsageError

from conftest import make_trace


def direct_form_cascade(sections, x):
    """Reference biquad cascade, direct form I, one sample at a time."""
    y = [float(v) for v in x]
    for b0, b1, b2, a1, a2 in sections:
        x1 = x2 = y1 = y2 = 0.0
        out = []
        for v in y:
            w = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2
            x2, x1 = x1, v
            y2, y1 = y1, w
            out.append(w)
        y = out
    return np.array(y)


class TestMagnitude:
    @pytest.mark.parametrize(
        "axes, expected",
        [((3, 4, 0), 5.0), ((0, 0, 0), 0.0), ((1, 1, 1), math.sqrt(3))],
    )
    def test_values(self, axes, expected):
        tr = make_trace([(0.0, *axes), (0.01, *axes)], units="g")
        sig = dsp.magnitude(tr)
        assert sig.values[0] == pytest.approx(expected, abs=1e-15)
        assert len(sig) == 2 and sig.sample_rate_hz == 100.0 and sig.start_time_s == 0.0

    def test_requires_g(self):
        tr = make_trace([(0.0, 3, 4, 0)])
        with pytest.raises(UsageError):
            dsp.magnitude(tr)


class TestDesign:
    def test_cutoff_is_half_power(self, lp2):
        assert lp2.magnitude_response(2.0) == pytest.approx(1 / math.sqrt(2), abs=1e-6)

    def test_dc_gain(self, lp2):
        assert lp2.magnitude_response(0.0) == pytest.approx(1.0, abs=1e-9)

    def test_double_cutoff_near_analog_prototype(self, lp2):
        analog = 1 / math.sqrt(1 + 2.0**8)
        assert analog == pytest.approx(0.06238, abs=1e-5)
        assert lp2.magnitude_response(4.0) == pytest.approx(analog, abs=5e-3)

    def test_monotone_to_nyquist(self, lp2):
        mag = lp2.magnitude_response(np.linspace(0, 50, 1024))
        assert np.all(np.diff(mag) <= 1e-15)

    @pytest.mark.parametrize("order", range(1, 9))
    @pytest.mark.parametrize("cutoff", [0.5, 2.0, 7.5, 30.0])
    def test_matches_independent_design(self, order, cutoff):
        ours = dsp.design_butterworth(dsp.FilterSpec(order, cutoff), 100.0)
        assert len(ours.second_order_sections) == math.ceil(order / 2)
        ref = sps.butter(order, cutoff, fs=100.0, output="sos")
        f = np.linspace(0, 49.9, 400)
        _, h = sps.sosfreqz(ref, worN=f, fs=100.0)
        np.testing.assert_allclose(ours.magnitude_response(f), np.abs(h), atol=1e-10)
        assert np.all(np.abs(ours.poles()) < 1.0)
        assert ours.magnitude_response(0.0) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("cutoff", [50.0, 60.0])
    def test_rejects_cutoff_at_or_above_nyquist(self, cutoff):
        with pytest.raises(DesignError):
            dsp.design_butterworth(dsp.FilterSpec(4, cutoff), 100.0)

    @pytest.mark.parametrize("order", [0, 9, 2.5])
    def test_rejects_order(self, order):
        with pytest.raises(ConfigError):
            dsp.FilterSpec(order, 2.0)

    def test_response_csv(self, lp2):
        text = dsp.response_csv(lp2, n_points=5)
        lines = text.splitlines()
        assert lines[0] == "freq_hz,magnitude,phase_rad"
        assert len(lines) == 6
        assert float(lines[1].split(",")[1]) == pytest.approx(1.0)


class TestApply:
    def test_causal_matches_direct_form(self, lp2):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(500)
        out = dsp.apply_filter(dsp.Signal(100.0, 0.0, x), lp2, "causal")
        np.testing.assert_allclose(out.values, direct_form_cascade(lp2.second_order_sections, x), atol=1e-12)

    def test_impulse_sum_is_dc_gain(self, lp2):
        x = np.zeros(3000)
        x[0] = 1.0
        out = dsp.apply_filter(dsp.Signal(100.0, 0.0, x), lp2, "causal")
        assert out.values.sum() == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("mode", dsp.FILTER_MODES)
    def test_constant_passes(self, lp2, mode):
        c = 0.987
        out = dsp.apply_filter(dsp.Signal(100.0, 0.0, np.full(2000, c)), lp2, mode)
        settle = lp2.settling_samples if mode == "causal" else 0
        np.testing.assert_allclose(out.values[settle:], c, atol=1e-6)

    def test_zero_phase_rejects_10hz(self, lp2):
        t = np.arange(3000) / 100.0
        x = np.sin(2 * np.pi * 10.0 * t)
        out = dsp.apply_filter(dsp.Signal(100.0, 0.0, x), lp2, "zero_phase")
        bound = lp2.magnitude_response(10.0) ** 2
        assert bound < 0.01
        # steady state: one settling length in from either end
        s = lp2.settling_samples
        assert np.max(np.abs(out.values[s:-s])) < 0.01
        assert np.max(np.abs(out.values[s:-s])) <= bound * 1.01

    def test_zero_phase_interior_matches_sosfiltfilt(self, lp2):
        rng = np.random.default_rng(2)
        x = 1.0 + 0.01 * rng.standard_normal(4000)
        ours = dsp.apply_filter(dsp.Signal(100.0, 0.0, x), lp2, "zero_phase").values
        ref = sps.sosfiltfilt(lp2.sos, x)
        edge = 2 * lp2.settling_samples
        np.testing.assert_allclose(ours[edge:-edge], ref[edge:-edge], atol=1e-9)

    def test_zero_phase_no_lag(self, lp2):
        t = np.arange(6000) / 100.0
        x = np.sin(2 * np.pi * 1.1 * t) + 0.5 * np.sin(2 * np.pi * 0.6 * t + 0.3)
        y = dsp.apply_filter(dsp.Signal(100.0, 0.0, x), lp2, "zero_phase").values
        lags = np.arange(-50, 51)
        core = slice(500, 5500)
        xc = [np.dot(x[core], np.roll(y, -k)[core]) for k in lags]
        assert lags[int(np.argmax(xc))] == 0

    def test_rate_mismatch(self, lp2):
        with pytest.raises(UsageError):
            dsp.apply_filter(dsp.Signal(50.0, 0.0, np.ones(10)), lp2)

    def test_short_signal(self, lp2):
        out = dsp.apply_filter(dsp.Signal(100.0, 0.0, [1.0, 2.0, 3.0]), lp2)
        assert len(out) == 3 and np.all(np.isfinite(out.values))

    def test_lowpass_uses_spec_mode(self):
        x = dsp.Signal(100.0, 0.0, np.random.default_rng(0).standard_normal(300))
        spec = dsp.FilterSpec(4, 2.0, "causal")
        real = dsp.design_butterworth(spec, 100.0)
        np.testing.assert_array_equal(dsp.lowpass(x, spec).values, dsp.apply_filter(x, real, "causal").values)

    @pytest.mark.parametrize("order", range(1, 9))
    @pytest.mark.parametrize("cutoff", [0.5, 2.0, 20.0, 45.0])
    def test_impulse_response_decays(self, order, cutoff):
        real = dsp.design_butterworth(dsp.FilterSpec(order, cutoff), 100.0)
        h = np.abs(real.impulse_response(30_000))
        assert h[-100:].max() < 1e-12 * h.max()
