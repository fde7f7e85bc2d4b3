import numpy as np
import pytest

from fusekit import TimeSeries


def tone(freq_hz: float, fs: float, duration_s: float, n_features: int = 1,
         amplitude: float = 1.0, phase: float = 0.0) -> TimeSeries:
    """Pure sinusoid, identical in every feature."""
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    column = amplitude * np.sin(2 * np.pi * freq_hz * t + phase)
    return TimeSeries(np.tile(column[:, None], (1, n_features)), fs)


def dft_magnitude(values: np.ndarray, fs: float, freq_hz: float) -> float:
    """Single-frequency amplitude by direct correlation (O(n) DFT bin).

    Independent of any FFT library path: evaluates
    |2/N * sum x[n] exp(-2i*pi*f*n/fs)| at one frequency.
    """
    n = len(values)
    t = np.arange(n) / fs
    return abs(2.0 / n * np.sum(values * np.exp(-2j * np.pi * freq_hz * t)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
