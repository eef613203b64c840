"""Shared fixtures: synthetic HRIR sets, analyzer bank, cached cue summaries.

The expensive artifacts (diffuse reference, granular stimulus summaries)
are built once per session and cached; each cached artifact records its
build time so acceptance tests can account runtime honestly, including
work done inside fixtures.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

import grainfield as gf
from grainfield import cues

SR = 48000
STIM_DURATION_S = 5.0
N_SEEDS = 10
SOURCE_SEED = 999


class TimedSummary:
    """A pooled CueSummary plus the wall time spent building it."""

    def __init__(self, summary, elapsed_s: float):
        self.summary = summary
        self.elapsed_s = elapsed_s


class CueLab:
    """Session-wide cache of rendered stimuli and their cue summaries."""

    def __init__(self):
        self.bank = cues.default_bank(SR)
        self.ring_subset = gf.builtin_subset("RING360")
        self.ring_hrirs = gf.synthetic_hrir_set(self.ring_subset.directions, SR, 512)
        self.layout = gf.builtin_layout_cube25()
        self.cube_hrirs = gf.synthetic_hrir_set(self.layout.directions, SR, 512)
        self.source = gf.generate_pink_noise(10.0, SR, seed=SOURCE_SEED)
        self._cache: dict = {}

    def steady_binaural(self, subset_name, dt_s, grain_len_s, seed_range_s, seed):
        """Render one binaural stimulus, trimmed to steady state and
        normalized to -20 dBFS."""
        subset = gf.builtin_subset(subset_name, self.layout)
        hrirs = self.ring_hrirs if subset_name == "RING360" else self.cube_hrirs
        params = gf.SynthesisParams(
            delta_t_s=dt_s,
            grain_len_s=grain_len_s,
            seed_range_s=seed_range_s,
            jitter_frac=0.0,
            window="hann",
            duration_s=STIM_DURATION_S + grain_len_s,
            rng_seed=seed,
        )
        schedule = gf.schedule_grains(params, subset)
        out = gf.render_binaural(self.source, schedule, hrirs)
        n0 = int(round(grain_len_s * SR))
        out = out.trimmed(n0, n0 + int(round(STIM_DURATION_S * SR)))
        return out.normalized(-20.0)

    def stimulus_summary(self, subset_name, dt_s, grain_len_s, seed_range_s=5.0,
                         n_seeds=N_SEEDS) -> TimedSummary:
        key = ("stim", subset_name, dt_s, grain_len_s, seed_range_s, n_seeds)
        if key not in self._cache:
            t0 = time.time()
            frames = []
            for seed in range(n_seeds):
                stim = self.steady_binaural(subset_name, dt_s, grain_len_s,
                                            seed_range_s, seed)
                frames += cues.analyze_signal(stim, self.bank)
            summary = cues.summarize_with_bank(frames, self.bank)
            self._cache[key] = TimedSummary(summary, time.time() - t0)
        return self._cache[key]

    def reference_summary(self, n_seeds=N_SEEDS) -> TimedSummary:
        key = ("ref", n_seeds)
        if key not in self._cache:
            t0 = time.time()
            frames = []
            for seed in range(n_seeds):
                ref = cues.simulate_diffuse_reference(self.ring_hrirs,
                                                      STIM_DURATION_S, seed=seed)
                frames += cues.analyze_signal(ref, self.bank)
            summary = cues.summarize_with_bank(frames, self.bank)
            self._cache[key] = TimedSummary(summary, time.time() - t0)
        return self._cache[key]

    def band_mask(self, lo_hz, hi_hz) -> np.ndarray:
        c = self.bank.centers_hz
        return (c >= lo_hz) & (c <= hi_hz)


@pytest.fixture(scope="session")
def lab() -> CueLab:
    return CueLab()


@pytest.fixture(scope="session")
def ring_hrirs(lab):
    return lab.ring_hrirs


@pytest.fixture(scope="session")
def cube_hrirs(lab):
    return lab.cube_hrirs


@pytest.fixture(scope="session")
def bank48(lab):
    return lab.bank
