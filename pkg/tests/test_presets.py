import numpy as np
import pytest

import grainfield as gf
from grainfield import DataError, StatisticsError
from grainfield.presets import (
    ContrastFamily,
    PresetBundle,
    all_presets,
    load_ratings_csv,
    preset_experiment1,
    preset_experiment2,
    reanalyze_ratings,
    render_condition,
    results_to_csv,
)


class TestExperiment1:
    def test_trial_ids(self):
        ids = [b.trial_id for b in preset_experiment1()]
        assert ids == ["exp1.t1", "exp1.t2", "exp1.t3", "exp1.t4", "exp1.t5"]

    def test_eight_conditions_per_trial(self):
        for bundle in preset_experiment1():
            assert len(bundle.conditions) == 8

    def test_trials_1_to_4_grid(self):
        bundles = {b.trial_id: b for b in preset_experiment1()}
        for trial, source, grain_len in (
            ("exp1.t1", "pink", 0.0005),
            ("exp1.t2", "pink", 0.250),
            ("exp1.t3", gf.presets.VOCAL_SAMPLE, 0.0005),
            ("exp1.t4", gf.presets.VOCAL_SAMPLE, 0.250),
        ):
            conds = bundles[trial].conditions
            assert {c.params.delta_t_s for c in conds} == {0.1, 0.02, 0.005, 0.001}
            assert {c.subset for c in conds} == {"L1", "L1L2L3"}
            assert all(c.source == source for c in conds)
            assert all(c.params.grain_len_s == grain_len for c in conds)
            assert all(c.params.jitter_frac == 0.01 for c in conds)
            assert all(c.params.seed_range_s >= 5.0 for c in conds)
            assert all(c.duration_s == 2.0 for c in conds)

    def test_impulsive_conditions_have_sub_unit_overlap(self):
        bundles = {b.trial_id: b for b in preset_experiment1()}
        short = [c for c in bundles["exp1.t1"].conditions if c.params.delta_t_s == 0.001]
        assert all(c.params.overlap == pytest.approx(0.5) for c in short)

    def test_trial5_overlap_250(self):
        bundle = {b.trial_id: b for b in preset_experiment1()}["exp1.t5"]
        assert all(c.params.overlap == pytest.approx(250.0) for c in bundle.conditions)
        assert {c.subset for c in bundle.conditions} == {"SP", "QP", "L1", "L1L2L3"}
        filtered = [c for c in bundle.conditions if c.lowpass is not None]
        assert len(filtered) == 4
        assert all(c.lowpass.cutoff_hz == 1800.0 and c.lowpass.order == 12 for c in filtered)


class TestExperiment2:
    def test_fixed_synthesis_parameters(self):
        for bundle in preset_experiment2():
            for c in bundle.conditions:
                assert c.params.delta_t_s == 0.005
                assert c.params.grain_len_s == 0.250

    def test_iia_subsets_and_anchors(self):
        bundle = {b.trial_id: b for b in preset_experiment2()}["exp2.iia"]
        for src in ("pink", "concret"):
            subsets = {c.subset for c in bundle.conditions if f".{src}." in c.id}
            assert subsets == {"L1", "L2", "L3", "L1L2", "L2L3", "L1L2L3", "SP", "ZEN"}

    def test_iib_bandwidth_grid(self):
        bundle = {b.trial_id: b for b in preset_experiment2()}["exp2.iib"]
        for src in ("pink", "concret"):
            conds = [c for c in bundle.conditions if f".{src}." in c.id]
            assert len(conds) == 8
            both = {c.subset for c in conds if c.lowpass is not None}
            assert both == {"L1", "L2L3", "L3"}  # filtered variants exist per layer set
            anchors = {c.subset for c in conds if c.subset in ("SP", "ZEN")}
            assert anchors == {"SP", "ZEN"}


class TestBundleSerialization:
    def test_round_trip_exact(self):
        for bundle in all_presets().values():
            back = PresetBundle.from_json(bundle.to_json())
            assert back == bundle

    def test_unique_condition_ids(self):
        seen = set()
        for bundle in all_presets().values():
            for c in bundle.conditions:
                assert c.id not in seen
                seen.add(c.id)


class TestRenderCondition:
    def test_pink_condition_renders(self):
        bundle = {b.trial_id: b for b in preset_experiment1()}["exp1.t5"]
        cond = next(c for c in bundle.conditions if c.id == "exp1.t5.SP.broadband")
        out, schedule = render_condition(cond)
        assert out.channels == 2  # SP renders to its two subset channels
        assert out.num_samples >= int(2.0 * 48000)
        assert len(schedule) == 2000

    def test_lowpass_condition_is_bandlimited(self):
        bundle = {b.trial_id: b for b in preset_experiment1()}["exp1.t5"]
        cond = next(c for c in bundle.conditions if c.id == "exp1.t5.SP.lowpass")
        out, _ = render_condition(cond)
        x = out.samples.sum(axis=0)
        spectrum = np.abs(np.fft.rfft(x))
        freqs = np.fft.rfftfreq(len(x), 1 / 48000)
        hi = np.mean(spectrum[(freqs > 6000) & (freqs < 10000)] ** 2)
        lo = np.mean(spectrum[(freqs > 300) & (freqs < 1500)] ** 2)
        assert 10 * np.log10(hi / lo) < -40

    def test_deterministic_render(self):
        bundle = {b.trial_id: b for b in preset_experiment1()}["exp1.t1"]
        cond = bundle.conditions[0]
        a, _ = render_condition(cond)
        b, _ = render_condition(cond)
        assert np.array_equal(a.samples, b.samples)

    def test_missing_external_sample_errors(self, tmp_path):
        bundle = {b.trial_id: b for b in preset_experiment1()}["exp1.t3"]
        with pytest.raises(DataError, match="missing"):
            render_condition(bundle.conditions[0], samples_dir=tmp_path)


def _make_table(rng, conditions, participants=15, offsets=None):
    rows = ["participant,condition,rating"]
    for p in range(participants):
        for i, cond in enumerate(conditions):
            base = 50.0 + (offsets[i] if offsets else 0.0)
            val = np.clip(base + rng.normal(0, 8), 0, 100)
            rows.append(f"p{p:02d},{cond},{val:.2f}")
    return "\n".join(rows) + "\n"


class TestRatings:
    def test_load_and_columns(self, tmp_path):
        rng = np.random.default_rng(0)
        path = tmp_path / "r.csv"
        path.write_text(_make_table(rng, ["a", "b"]))
        table = load_ratings_csv(path)
        assert table.participants == tuple(f"p{i:02d}" for i in range(15))
        assert len(table.column("a")) == 15

    def test_bad_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("subject,cond,val\n1,a,50\n")
        with pytest.raises(DataError, match="header"):
            load_ratings_csv(path)

    def test_out_of_scale_rating(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("participant,condition,rating\np0,a,105\n")
        with pytest.raises(DataError, match="outside"):
            load_ratings_csv(path)

    def test_reanalyze_shapes(self, tmp_path):
        rng = np.random.default_rng(1)
        path = tmp_path / "r.csv"
        path.write_text(_make_table(rng, ["a", "b", "c"], offsets=[0.0, 12.0, 13.0]))
        table = load_ratings_csv(path)
        families = [ContrastFamily("main", (("a", "b"), ("b", "c"), ("a", "c")))]
        results = reanalyze_ratings(table, families)
        assert len(results) == 3
        raws = [r["p_raw"] for r in results]
        from grainfield import holm_correction

        assert [r["p_holm"] for r in results] == pytest.approx(holm_correction(raws))
        csv_text = results_to_csv(results)
        assert csv_text.splitlines()[0] == "family,condition_a,condition_b,p_raw,p_holm"
        assert len(csv_text.strip().splitlines()) == 4

    def test_identical_columns_propagate_statistics_error(self, tmp_path):
        rng = np.random.default_rng(2)
        path = tmp_path / "r.csv"
        path.write_text(_make_table(rng, ["a"]))
        table = load_ratings_csv(path)
        # contrast of a column against itself: no non-zero differences
        with pytest.raises(StatisticsError):
            reanalyze_ratings(table, [ContrastFamily("x", (("a", "a"),))])

    def test_missing_condition_is_data_error(self, tmp_path):
        rng = np.random.default_rng(3)
        path = tmp_path / "r.csv"
        path.write_text(_make_table(rng, ["a", "b"]))
        table = load_ratings_csv(path)
        with pytest.raises(DataError, match="unknown condition"):
            reanalyze_ratings(table, [ContrastFamily("x", (("a", "zzz"),))])
