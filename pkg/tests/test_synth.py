import numpy as np
import pytest

from fusekit import AnomalySpec, SynthSpec, batch_periods, generate, zero_crossings
from conftest import dft_magnitude


def three_phase_spec(**overrides):
    params = dict(
        fs=10_000.0,
        duration=1.0,
        fundamental=60.0,
        n_features=3,
        phase_offsets=(0.0, -2 * np.pi / 3, 2 * np.pi / 3),
        seed=0,
    )
    params.update(overrides)
    return SynthSpec(**params)


class TestGenerate:
    def test_three_phase_peak_at_fundamental(self):
        series = generate(three_phase_spec())
        assert series.data.shape == (10_000, 3)
        freqs = np.fft.rfftfreq(series.n_samples, 1 / series.fs)
        for j in range(3):
            mags = np.abs(np.fft.rfft(series.data[:, j]))
            assert freqs[np.argmax(mags)] == pytest.approx(60.0)
            assert dft_magnitude(series.data[:, j], series.fs, 60.0) == pytest.approx(1.0, abs=1e-9)

    def test_noise_free_crossing_count(self):
        series = generate(three_phase_spec(noise_sigma=0.0))
        found = zero_crossings(series)
        ref = series.data[:, 0]
        scanned = [n for n in range(1, len(ref)) if ref[n - 1] > 0 >= ref[n]]
        assert list(found) == scanned
        assert len(found) == 60

    def test_amplitude_step_doubles_second_half_rms(self):
        spec = three_phase_spec(
            noise_sigma=0.01,
            anomaly=AnomalySpec(kind="amplitude_step", start=0.5, magnitude=2.0),
        )
        series = generate(spec)
        half = series.n_samples // 2
        rms_head = np.sqrt(np.mean(series.data[:half] ** 2))
        rms_tail = np.sqrt(np.mean(series.data[half:] ** 2))
        assert rms_tail / rms_head == pytest.approx(2.0, rel=0.02)

    def test_harmonic_injection_adds_interharmonic(self):
        clean = generate(three_phase_spec())
        faulty = generate(three_phase_spec(
            anomaly=AnomalySpec(kind="harmonic_injection", start=0.0, magnitude=0.5),
        ))
        injected_hz = 2.5 * 60.0
        assert dft_magnitude(clean.data[:, 0], clean.fs, injected_hz) < 0.01
        assert dft_magnitude(faulty.data[:, 0], faulty.fs, injected_hz) == pytest.approx(0.5, abs=0.01)

    def test_dropout_silences_signal(self):
        spec = three_phase_spec(
            anomaly=AnomalySpec(kind="dropout", start=0.5, magnitude=1.0),
        )
        series = generate(spec)
        half = series.n_samples // 2
        assert np.abs(series.data[half + 1:]).max() == 0.0

    def test_deterministic_under_seed(self):
        spec = three_phase_spec(noise_sigma=0.3, seed=77)
        np.testing.assert_array_equal(generate(spec).data, generate(spec).data)

    def test_seed_changes_noise(self):
        a = generate(three_phase_spec(noise_sigma=0.3, seed=1))
        b = generate(three_phase_spec(noise_sigma=0.3, seed=2))
        assert not np.array_equal(a.data, b.data)

    def test_default_phases_are_balanced(self):
        series = generate(SynthSpec(fs=5_000.0, duration=0.5, fundamental=50.0, n_features=3))
        # balanced multi-phase layout sums to ~zero at every instant
        np.testing.assert_allclose(series.data.sum(axis=1), 0.0, atol=1e-9)


class TestSpecValidation:
    def test_fundamental_above_nyquist_rejected(self):
        with pytest.raises(ValueError, match="fundamental"):
            SynthSpec(fs=100.0, duration=1.0, fundamental=60.0)

    def test_too_short_duration_rejected(self):
        with pytest.raises(ValueError, match="2 periods"):
            SynthSpec(fs=1_000.0, duration=0.02, fundamental=50.0)

    def test_zero_duration_rejected(self):
        with pytest.raises(ValueError, match="duration"):
            SynthSpec(fs=1_000.0, duration=0.0, fundamental=50.0)

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError, match="noise_sigma"):
            SynthSpec(fs=1_000.0, duration=1.0, fundamental=50.0, noise_sigma=-1.0)

    def test_harmonic_above_nyquist_rejected(self):
        with pytest.raises(ValueError, match="harmonic"):
            SynthSpec(fs=1_000.0, duration=1.0, fundamental=50.0,
                      harmonic_amplitudes=((1, 1.0), (11, 0.1)))

    def test_anomaly_kind_validated(self):
        with pytest.raises(ValueError, match="anomaly kind"):
            AnomalySpec(kind="explosion", start=0.1, magnitude=1.0)

    def test_anomaly_past_end_rejected(self):
        with pytest.raises(ValueError, match="past"):
            SynthSpec(fs=1_000.0, duration=1.0, fundamental=50.0,
                      anomaly=AnomalySpec(kind="dropout", start=2.0, magnitude=1.0))


class TestSynthProperties:
    def test_healthy_output_batches_at_any_period_count(self):
        spec = three_phase_spec(duration=0.5, noise_sigma=0.05, seed=3)
        series = generate(spec)
        max_periods = int(np.floor(spec.duration * spec.fundamental)) - 1
        for periods in (1, max_periods // 2, max_periods):
            batches = batch_periods(series, periods)
            assert batches, f"no batches for P={periods}"

    def test_noisier_spec_has_more_off_harmonic_energy(self):
        quiet = generate(three_phase_spec(noise_sigma=0.01, seed=5))
        loud = generate(three_phase_spec(noise_sigma=0.2, seed=5))

        def off_harmonic_energy(series):
            mags = np.abs(np.fft.rfft(series.data[:, 0])) ** 2
            freqs = np.fft.rfftfreq(series.n_samples, 1 / series.fs)
            harmonic = np.zeros_like(freqs, dtype=bool)
            for h in range(1, int(freqs[-1] // 60) + 1):
                harmonic |= np.abs(freqs - 60.0 * h) < 2.0
            return mags[~harmonic & (freqs > 0)].sum()

        assert off_harmonic_energy(loud) > off_harmonic_energy(quiet)
