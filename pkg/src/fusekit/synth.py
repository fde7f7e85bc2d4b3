"""Synthetic periodic multi-feature signal generator.

Produces harmonics-plus-noise signals shaped like multi-phase current
recordings, with optional injected faults, so the whole pipeline can be
exercised without real sensor data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import TimeSeries

__all__ = ["AnomalySpec", "SynthSpec", "generate"]

ANOMALY_KINDS = ("amplitude_step", "harmonic_injection", "dropout")

# Frequency of the injected interharmonic component, as a multiple of the
# fundamental; deliberately off the harmonic grid so it stands out.
_INJECTION_HARMONIC = 2.5


@dataclass(frozen=True)
class AnomalySpec:
    """A fault applied from `start` seconds onward.

    amplitude_step scales the signal by `magnitude`; harmonic_injection
    adds an interharmonic tone of relative amplitude `magnitude`; dropout
    attenuates by (1 - magnitude), so magnitude 1 silences the signal.
    """

    kind: str
    start: float
    magnitude: float

    def __post_init__(self) -> None:
        if self.kind not in ANOMALY_KINDS:
            raise ValueError(f"anomaly kind must be one of {ANOMALY_KINDS}, got '{self.kind}'")
        if self.start < 0:
            raise ValueError(f"anomaly start must be >= 0 s, got {self.start}")
        if self.kind == "dropout" and not 0.0 <= self.magnitude <= 1.0:
            raise ValueError(f"dropout magnitude must be in [0, 1], got {self.magnitude}")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic dataset.

    Each feature k is sum_h amp_h * sin(2*pi*h*fundamental*t + phase_k)
    plus independent Gaussian noise of std `noise_sigma`. Default phases
    spread the features evenly over one cycle (three features reproduce a
    0 / -120 / +120 degree three-phase layout).
    """

    fs: float
    duration: float
    fundamental: float
    n_features: int = 3
    phase_offsets: tuple[float, ...] | None = None
    harmonic_amplitudes: tuple[tuple[float, float], ...] = ((1, 1.0),)
    noise_sigma: float = 0.0
    anomaly: AnomalySpec | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.fs <= 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if not 0 < self.fundamental < self.fs / 2:
            raise ValueError(
                f"fundamental {self.fundamental} Hz must lie in (0, fs/2={self.fs / 2})"
            )
        if self.duration * self.fundamental < 2:
            raise ValueError(
                f"duration {self.duration}s holds fewer than 2 periods of "
                f"{self.fundamental} Hz"
            )
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.phase_offsets is not None and len(self.phase_offsets) != self.n_features:
            raise ValueError(
                f"{len(self.phase_offsets)} phase offsets for {self.n_features} features"
            )
        for h, _amp in self.harmonic_amplitudes:
            if h * self.fundamental >= self.fs / 2:
                raise ValueError(
                    f"harmonic {h} at {h * self.fundamental} Hz is at or above Nyquist"
                )
        if self.anomaly is not None:
            if self.anomaly.start >= self.duration:
                raise ValueError(
                    f"anomaly start {self.anomaly.start}s is past the {self.duration}s signal"
                )
            if self.anomaly.kind == "harmonic_injection" and (
                _INJECTION_HARMONIC * self.fundamental >= self.fs / 2
            ):
                raise ValueError("injected interharmonic would sit above Nyquist")

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.duration))

    def phases(self) -> np.ndarray:
        if self.phase_offsets is not None:
            return np.asarray(self.phase_offsets, dtype=np.float64)
        return -2.0 * np.pi * np.arange(self.n_features) / self.n_features


def generate(spec: SynthSpec) -> TimeSeries:
    """Render a SynthSpec into a TimeSeries, deterministically per seed."""
    n = spec.n_samples
    t = np.arange(n) / spec.fs
    phases = spec.phases()
    data = np.zeros((n, spec.n_features))
    for h, amp in spec.harmonic_amplitudes:
        angle = 2.0 * np.pi * h * spec.fundamental * t
        data += amp * np.sin(angle[:, None] + phases[None, :])
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        data += rng.normal(0.0, spec.noise_sigma, size=data.shape)

    if spec.anomaly is not None:
        i0 = int(round(spec.anomaly.start * spec.fs))
        kind, magnitude = spec.anomaly.kind, spec.anomaly.magnitude
        if kind == "amplitude_step":
            data[i0:] *= magnitude
        elif kind == "harmonic_injection":
            angle = 2.0 * np.pi * _INJECTION_HARMONIC * spec.fundamental * t[i0:]
            data[i0:] += magnitude * np.sin(angle[:, None] + phases[None, :])
        else:  # dropout
            data[i0:] *= 1.0 - magnitude

    names = tuple(f"phase_{chr(ord('a') + k)}" for k in range(spec.n_features))
    return TimeSeries(data, spec.fs, names)
