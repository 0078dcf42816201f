import numpy as np
import pytest

from penpulse import dsp, synth
from penpulse.ingest import RawTrace


@pytest.fixture(scope="session")
def lp2():
    """The 4th-order, 2 Hz design at 100 Hz."""
    return dsp.design_butterworth(dsp.FilterSpec(4, 2.0), 100.0)


@pytest.fixture(scope="session")
def synth_72():
    return synth.generate(synth.SynthSpec(mean_hr_bpm=72, seed=11))


def make_trace(rows, fs=100.0, units="counts"):
    arr = np.array(rows, dtype=float)
    return RawTrace(fs, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], units=units)


def bump_signal(centers, heights, fs=100.0, duration=5.0, sigma=0.05):
    t = np.arange(int(duration * fs)) / fs
    x = np.zeros_like(t)
    for c, h in zip(centers, heights):
        x += h * np.exp(-0.5 * ((t - c) / sigma) ** 2)
    return dsp.Signal(fs, 0.0, x)
