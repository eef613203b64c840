import numpy as np
import pytest

import grainfield as gf
from grainfield import (
    FirTapSet,
    GrainEvent,
    GrainSchedule,
    ParameterError,
    SynthesisParams,
    apply_sparse_fir,
    generate_pink_noise,
    reduce_schedule_to_fir,
    render_discrete,
    schedule_grains,
)

SR = 48000


class TestReduce:
    def test_three_events(self):
        sub = gf.builtin_subset("QP")
        p = SynthesisParams(0.010, 0.005, 0.0, 0.0, "rect", duration_s=0.03, rng_seed=0)
        sched = schedule_grains(p, sub)
        taps = reduce_schedule_to_fir(sched, sub)
        assert len(taps) == 3
        assert taps.coefficients == (1.0, 1.0, 1.0)
        assert taps.gain == pytest.approx(np.sqrt(3.0))

    def test_empty_schedule(self):
        p = SynthesisParams(0.010, 0.005, 0.0, 0.0, "rect", duration_s=0.03, rng_seed=0)
        taps = reduce_schedule_to_fir(GrainSchedule((), p))
        assert len(taps) == 0

    def test_periodic_lags(self):
        sub = gf.builtin_subset("ZEN")
        p = SynthesisParams(0.010, 0.002, 0.0, 0.0, "rect", duration_s=0.1, rng_seed=0)
        taps = reduce_schedule_to_fir(schedule_grains(p, sub), sub)
        assert taps.lags_s == tuple(i * 0.010 for i in range(10))

    def test_direction_targets_need_assignment(self):
        sub = gf.builtin_subset("SP")
        p = SynthesisParams(0.010, 0.002, 0.0, 0.0, "rect", duration_s=0.05, rng_seed=0)
        sched = schedule_grains(p, sub)
        with pytest.raises(ParameterError, match="assignment"):
            reduce_schedule_to_fir(sched)

    def test_json_round_trip(self):
        taps = FirTapSet((0.0, 0.25), (0, 1), (1.0, -0.5))
        back = FirTapSet.from_json(taps.to_json())
        assert back == taps


class TestApplySparseFir:
    def test_single_unit_tap_identity(self):
        src = generate_pink_noise(0.5, SR, seed=0)
        out = apply_sparse_fir(src, FirTapSet((0.0,), (0,), (1.0,)), 1)
        assert np.allclose(out.samples[0], src.mono, atol=1e-15)

    def test_two_equal_taps_sum(self):
        src = generate_pink_noise(0.5, SR, seed=1)
        out = apply_sparse_fir(src, FirTapSet((0.0, 0.0), (0, 0), (1.0, 1.0)), 1)
        assert np.allclose(out.samples[0], np.sqrt(2.0) * src.mono, atol=1e-12)

    def test_against_dense_convolution_oracle(self):
        rng = np.random.default_rng(42)
        src = generate_pink_noise(0.25, SR, seed=2)
        lags = rng.integers(0, 2000, 50)
        coeffs = rng.standard_normal(50)
        taps = FirTapSet(tuple(lags / SR), (0,) * 50, tuple(coeffs))
        out = apply_sparse_fir(src, taps, 1)
        dense = np.zeros(int(lags.max()) + 1)
        for lag, h in zip(lags, coeffs):
            dense[lag] += h
        oracle = np.convolve(src.mono, dense) / np.sqrt(np.sum(coeffs**2))
        assert np.max(np.abs(out.samples[0] - oracle)) < 1e-9

    def test_channel_out_of_range(self):
        src = generate_pink_noise(0.1, SR, seed=0)
        with pytest.raises(ParameterError, match="channel"):
            apply_sparse_fir(src, FirTapSet((0.0,), (2,), (1.0,)), 2)

    def test_sub_sample_lag_rejected(self):
        src = generate_pink_noise(0.1, SR, seed=0)
        with pytest.raises(ParameterError, match="sub-sample"):
            apply_sparse_fir(src, FirTapSet((0.5 / SR,), (0,), (1.0,)), 1)

    def test_energy_accounting_white_noise(self):
        # output power per channel ~ input power * (sum h^2 per channel)/G^2
        rng = np.random.default_rng(3)
        n = 60 * SR // 10  # 6 s is plenty at this tolerance
        src = gf.AudioBuffer(rng.standard_normal(n) * 0.1, SR)
        lags = np.arange(40) * 0.010
        channels = tuple(int(i % 2) for i in range(40))
        coeffs = tuple(float(c) for c in rng.uniform(0.5, 1.5, 40))
        taps = FirTapSet(tuple(lags), channels, coeffs)
        out = apply_sparse_fir(src, taps, 2)
        h2 = np.zeros(2)
        for ch, h in zip(channels, coeffs):
            h2[ch] += h * h
        in_power = np.mean(np.square(src.mono))
        for ch in range(2):
            expected = in_power * h2[ch] / taps.gain**2
            measured = np.mean(np.square(out.samples[ch][: n]))
            assert 10 * np.log10(measured / expected) == pytest.approx(0.0, abs=0.5)


class TestEquivalence:
    def test_granular_equals_sparse_fir(self):
        # rect window, q = 0, gain overridden to sqrt(sum h^2): the grain
        # engine reduces to the sparse FIR system when grains cover the
        # whole source support.
        rng = np.random.default_rng(7)
        sub = gf.builtin_subset("QP")
        for trial in range(100):
            src = generate_pink_noise(rng.uniform(0.05, 0.2), SR, seed=trial)
            dt = int(rng.integers(192, 2400)) / SR  # sample-aligned grain interval
            dur = rng.uniform(0.05, 0.3)
            # grain window exactly covers the source support (L = N, Q = 0)
            p = SynthesisParams(dt, src.duration_s, 0.0, 0.0, "rect",
                                duration_s=dur, rng_seed=trial)
            sched = schedule_grains(p, sub)
            taps = reduce_schedule_to_fir(sched, sub)
            granular = render_discrete(src, sched, sub, gain_override=taps.gain)
            fir = apply_sparse_fir(src, taps, len(sub))
            n = min(granular.num_samples, fir.num_samples)
            diff = np.abs(granular.samples[:, :n] - fir.samples[:, :n])
            assert diff.max() < 1e-6
            # outside the overlap both are still defined; check tails are zero
            assert np.all(np.abs(granular.samples[:, n:]) < 1e-6)
            assert np.all(np.abs(fir.samples[:, n:]) < 1e-6)
