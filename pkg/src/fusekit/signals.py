"""Numeric kernels for periodic time-series preprocessing.

Everything here operates on :class:`TimeSeries` values and is a pure
function: no hidden state, deterministic outputs, safe to call from
multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import oaconvolve

__all__ = [
    "TimeSeries",
    "FirFilter",
    "Spectrum",
    "target_fs",
    "design_lowpass",
    "apply_fir",
    "resample_fourier",
    "zscore",
    "zero_crossings",
    "spectrum",
]


@dataclass(frozen=True)
class TimeSeries:
    """A multi-feature sampled signal.

    data: (n_samples, n_features) float matrix, all values finite.
    fs: sampling frequency in Hz, > 0.
    feature_names: one name per column; auto-generated as f0, f1, ...
        when omitted.
    """

    data: np.ndarray
    fs: float
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ValueError(f"data must be 1-D or 2-D, got ndim={data.ndim}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"data must be non-empty, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains NaN or Inf values")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        names = tuple(self.feature_names)
        if not names:
            names = tuple(f"f{i}" for i in range(data.shape[1]))
        if len(names) != data.shape[1]:
            raise ValueError(
                f"{len(names)} feature names for {data.shape[1]} features"
            )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        """Signal length in seconds."""
        return self.n_samples / self.fs

    def with_data(self, data: np.ndarray, fs: float | None = None) -> "TimeSeries":
        """New series with the same feature names but different samples."""
        return TimeSeries(data, self.fs if fs is None else fs, self.feature_names)


@dataclass(frozen=True)
class FirFilter:
    """Linear-phase low-pass FIR filter.

    taps: odd-length symmetric coefficient vector summing to 1 (unit DC
        gain).
    cutoff_normalized: cyclic cutoff frequency in (0, 0.5], relative to
        the sampling frequency of the signal the filter is applied to.
    """

    taps: np.ndarray
    cutoff_normalized: float

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size < 3 or taps.size % 2 == 0:
            raise ValueError("taps must be a 1-D odd-length vector of size >= 3")
        if not 0.0 < self.cutoff_normalized <= 0.5:
            raise ValueError(
                f"cutoff_normalized must be in (0, 0.5], got {self.cutoff_normalized}"
            )
        if abs(taps.sum() - 1.0) > 1e-9:
            raise ValueError("taps must sum to 1 (unit DC gain)")
        if not np.allclose(taps, taps[::-1], atol=1e-12, rtol=0.0):
            raise ValueError("taps must be symmetric (linear phase)")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "cutoff_normalized", float(self.cutoff_normalized))

    @property
    def num_taps(self) -> int:
        return self.taps.size

    @property
    def order(self) -> int:
        return self.taps.size - 1


@dataclass(frozen=True)
class Spectrum:
    """Complex DFT bins of one feature; bin k sits at k * bin_resolution Hz."""

    bins: np.ndarray
    bin_resolution: float


def target_fs(fs_list) -> float:
    """Common sampling frequency for a set of datasets: the minimum.

    Downsampling everything to the slowest source keeps the same physical
    span per model look-back window across datasets.
    """
    fs_list = list(fs_list)
    if not fs_list:
        raise ValueError("no datasets: fs_list is empty")
    if any(fs <= 0 for fs in fs_list):
        raise ValueError(f"sampling frequencies must be positive, got {fs_list}")
    return float(min(fs_list))


def design_lowpass(num_taps: int, cutoff_normalized: float) -> FirFilter:
    """Design a Hann-windowed-sinc low-pass FIR filter.

    The impulse response is sin(2*pi*fc*(n - M/2)) / (n - M/2) tapered by
    a symmetric Hann window, where M = num_taps - 1 and fc is the cyclic
    cutoff. The centre tap takes the analytic limit 2*pi*fc, and the
    whole response is scaled so the taps sum to exactly 1 (unit DC gain).

    Args:
        num_taps: odd filter length, >= 3.
        cutoff_normalized: cyclic cutoff in (0, 0.5] relative to the
            sampling frequency of the target signal.
    """
    if num_taps < 3 or num_taps % 2 == 0:
        raise ValueError(f"num_taps must be odd and >= 3, got {num_taps}")
    if not 0.0 < cutoff_normalized <= 0.5:
        raise ValueError(
            f"cutoff_normalized must be in (0, 0.5], got {cutoff_normalized}"
        )
    m = num_taps - 1
    n = np.arange(num_taps, dtype=np.float64)
    shifted = n - m / 2.0
    core = np.empty(num_taps)
    nonzero = shifted != 0.0
    core[nonzero] = np.sin(2.0 * np.pi * cutoff_normalized * shifted[nonzero]) / shifted[nonzero]
    core[~nonzero] = 2.0 * np.pi * cutoff_normalized
    taps = core * np.hanning(num_taps)
    taps /= taps.sum()
    return FirFilter(taps=taps, cutoff_normalized=cutoff_normalized)


def apply_fir(x: TimeSeries, f: FirFilter) -> TimeSeries:
    """Filter every feature with a linear-phase FIR filter.

    Zero-padded linear convolution with "same" alignment: the output has
    the input's length and the M/2 group delay is compensated, so the
    filtered signal stays time-aligned with the input. Edge samples
    (within M/2 of either end) see the zero padding.
    """
    if x.n_samples < f.num_taps:
        raise ValueError(
            f"signal has {x.n_samples} samples, shorter than the "
            f"{f.num_taps}-tap filter"
        )
    out = np.empty_like(x.data)
    for j in range(x.n_features):
        out[:, j] = oaconvolve(x.data[:, j], f.taps, mode="same")
    return x.with_data(out)


def _new_sample_count(n: int, fs: float, fs_new: float) -> int:
    # floor of the exact n * fs_new / fs; the small bias guards against
    # the float quotient landing just below an integer value.
    return int(math.floor(n * fs_new / fs + 1e-9))


def resample_fourier(x: TimeSeries, fs_new: float) -> TimeSeries:
    """Downsample via the Fourier method.

    Per feature: forward DFT, drop every bin at or above the new Nyquist
    frequency fs_new/2, inverse DFT at the new length
    N_new = floor(N * fs_new / fs), and rescale amplitudes by N_new / N.
    The new length never extends past the source duration, and
    N_new / fs_new matches N / fs to within one sample period.

    Anti-alias filtering is the caller's job (see :func:`design_lowpass`
    with cutoff (fs_new/2)/fs); bins above the new Nyquist are discarded
    exactly either way.

    Args:
        x: input series.
        fs_new: target sampling frequency; must not exceed x.fs.
    """
    if fs_new <= 0:
        raise ValueError(f"fs_new must be positive, got {fs_new}")
    if fs_new > x.fs:
        raise ValueError(
            f"upsampling unsupported: fs_new={fs_new} exceeds source fs={x.fs}"
        )
    if fs_new == x.fs:
        return x.with_data(x.data.copy())

    n = x.n_samples
    n_new = _new_sample_count(n, x.fs, fs_new)
    if n_new < 1:
        raise ValueError(
            f"resampling {n} samples from {x.fs} Hz to {fs_new} Hz leaves no samples"
        )
    # Real-input transform; conjugate symmetry makes it equivalent to the
    # full complex DFT for real signals.
    spec = np.fft.rfft(x.data, axis=0)
    kept = (n_new + 1) // 2  # bins strictly below the new Nyquist
    new_spec = np.zeros((n_new // 2 + 1, x.n_features), dtype=spec.dtype)
    new_spec[:kept] = spec[:kept]
    out = np.fft.irfft(new_spec, n=n_new, axis=0) * (n_new / n)
    return x.with_data(out, fs=fs_new)


def zscore(x: TimeSeries) -> TimeSeries:
    """Standardize each feature to zero mean and unit population std."""
    mean = x.data.mean(axis=0)
    std = x.data.std(axis=0)  # population sigma (ddof=0)
    for j, s in enumerate(std):
        if s == 0.0:
            raise ValueError(
                f"zero variance in feature '{x.feature_names[j]}': cannot z-score"
            )
    return x.with_data((x.data - mean) / std)


def zero_crossings(x: TimeSeries) -> np.ndarray:
    """Indices of positive-to-negative zero crossings of the first feature.

    Returns every n with x[n-1] > 0 >= x[n], in increasing order. Only
    feature 0 is inspected so multi-feature slicing keeps the features'
    temporal alignment.
    """
    if x.n_samples < 2:
        raise ValueError("need at least 2 samples to detect crossings")
    ref = x.data[:, 0]
    mask = (ref[:-1] > 0.0) & (ref[1:] <= 0.0)
    return np.nonzero(mask)[0] + 1


def spectrum(x: TimeSeries, feature: int = 0) -> Spectrum:
    """Full complex DFT of one feature; bin count equals the signal length."""
    if not 0 <= feature < x.n_features:
        raise ValueError(f"feature index {feature} out of range")
    bins = np.fft.fft(x.data[:, feature])
    return Spectrum(bins=bins, bin_resolution=x.fs / x.n_samples)
