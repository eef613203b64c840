import numpy as np
import pytest
from scipy.signal import welch

from grainfield import AudioBuffer, FilterSpec, ParameterError, apply_lowpass, generate_pink_noise

SR = 48000


class TestPinkNoise:
    def test_length_and_rms(self):
        buf = generate_pink_noise(10.0, SR, seed=1)
        assert buf.num_samples == 480_000
        assert buf.channels == 1
        assert buf.rms() == pytest.approx(0.1, rel=0.01)

    def test_deterministic_per_seed(self):
        a = generate_pink_noise(2.0, SR, seed=7)
        b = generate_pink_noise(2.0, SR, seed=7)
        assert np.array_equal(a.samples, b.samples)
        c = generate_pink_noise(2.0, SR, seed=8)
        assert not np.array_equal(a.samples, c.samples)

    def test_octave_step_is_3db(self):
        # Welch-average of a 60 s render; pink PSD drops 3.01 dB per octave.
        buf = generate_pink_noise(60.0, SR, seed=2)
        f, p = welch(buf.mono, fs=SR, nperseg=16384)

        def level(freq):
            m = (f >= freq * 0.93) & (f <= freq * 1.07)
            return 10.0 * np.log10(np.mean(p[m]))

        assert level(400.0) - level(800.0) == pytest.approx(3.01, abs=1.0)

    def test_slope_over_contract_range(self):
        buf = generate_pink_noise(60.0, SR, seed=3)
        f, p = welch(buf.mono, fs=SR, nperseg=16384)

        def level(freq):
            m = (f >= freq * 0.93) & (f <= freq * 1.07)
            return 10.0 * np.log10(np.mean(p[m]))

        ref = level(1000.0)
        for freq in (100.0, 215.0, 464.0, 1000.0, 2154.0, 4641.0, 10000.0):
            expected = ref - 10.0 * np.log10(freq / 1000.0)
            assert level(freq) == pytest.approx(expected, abs=1.0)

    @pytest.mark.parametrize("duration,rate", [(0.0, SR), (-1.0, SR), (1.0, 0), (1.0, -48000)])
    def test_invalid_parameters(self, duration, rate):
        with pytest.raises(ParameterError):
            generate_pink_noise(duration, rate, seed=0)


class TestLowpass:
    SPEC = FilterSpec(cutoff_hz=1800.0, order=12)

    def _sine_gain_db(self, freq, spec=SPEC):
        t = np.arange(2 * SR) / SR
        buf = AudioBuffer(np.sin(2 * np.pi * freq * t), SR)
        y = apply_lowpass(buf, spec).mono
        seg = slice(SR // 2, 3 * SR // 2)
        c = np.sin(2 * np.pi * freq * t[seg])
        s = np.cos(2 * np.pi * freq * t[seg])
        amp = 2.0 * np.hypot(np.mean(y[seg] * c), np.mean(y[seg] * s))
        return 20.0 * np.log10(amp)

    def test_half_power_at_cutoff(self):
        assert self._sine_gain_db(1800.0) == pytest.approx(-3.01, abs=0.1)

    def test_gain_at_twice_cutoff(self):
        # analytic: 10*log10(1 + 2^24) = 72.247 dB attenuation
        assert self._sine_gain_db(3600.0) == pytest.approx(-10 * np.log10(1 + 2**24), abs=1.0)

    def test_matches_analytic_magnitude_to_09_nyquist(self):
        for freq in (300.0, 900.0, 1800.0, 2700.0, 3600.0, 5400.0):
            expected = 20.0 * np.log10(self.SPEC.magnitude(np.array([freq]))[0])
            assert self._sine_gain_db(freq) == pytest.approx(expected, abs=0.5)
        # deep stopband up to 0.9*Nyquist, order 4 keeps levels measurable
        gentle = FilterSpec(cutoff_hz=1800.0, order=4)
        for freq in (9000.0, 21600.0):
            expected = 20.0 * np.log10(gentle.magnitude(np.array([freq]))[0])
            assert self._sine_gain_db(freq, gentle) == pytest.approx(expected, abs=0.5)

    def test_silence_in_silence_out(self):
        buf = AudioBuffer(np.zeros(SR), SR)
        assert np.all(apply_lowpass(buf, self.SPEC).samples == 0.0)

    def test_linearity(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(SR // 2)
        y = rng.standard_normal(SR // 2)
        a, b = 0.7, -1.3
        fx = apply_lowpass(AudioBuffer(x, SR), self.SPEC).mono
        fy = apply_lowpass(AudioBuffer(y, SR), self.SPEC).mono
        fxy = apply_lowpass(AudioBuffer(a * x + b * y, SR), self.SPEC).mono
        assert np.max(np.abs(fxy - (a * fx + b * fy))) < 1e-9

    def test_deterministic(self):
        x = generate_pink_noise(1.0, SR, seed=5)
        y1 = apply_lowpass(x, self.SPEC)
        y2 = apply_lowpass(x, self.SPEC)
        assert np.array_equal(y1.samples, y2.samples)

    def test_cutoff_at_or_above_nyquist_rejected(self):
        buf = AudioBuffer(np.zeros(100), SR)
        with pytest.raises(ParameterError):
            apply_lowpass(buf, FilterSpec(cutoff_hz=24000.0, order=12))

    @pytest.mark.parametrize("order", [0, -2, 3, 7])
    def test_odd_or_nonpositive_order_rejected(self, order):
        with pytest.raises(ParameterError):
            FilterSpec(cutoff_hz=1000.0, order=order)


class TestAudioBuffer:
    def test_immutable(self):
        buf = generate_pink_noise(0.1, SR, seed=0)
        with pytest.raises(ValueError):
            buf.samples[0, 0] = 1.0

    def test_duration_exact(self):
        buf = AudioBuffer(np.zeros(4800), SR)
        assert buf.duration_s == 4800 / SR

    def test_planar_multichannel(self):
        buf = AudioBuffer(np.zeros((3, 100)), SR)
        assert buf.channels == 3
        assert buf.num_samples == 100

    def test_mono_property_rejects_multichannel(self):
        buf = AudioBuffer(np.zeros((2, 10)), SR)
        with pytest.raises(ParameterError):
            _ = buf.mono

    def test_invalid_rate(self):
        with pytest.raises(ParameterError):
            AudioBuffer(np.zeros(10), 0)
