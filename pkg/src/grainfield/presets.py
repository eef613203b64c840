"""Declarative stimulus conditions of the two listening experiments,
plus re-analysis of rating tables.

Experiment 1, trials 1-4: grain lengths of 0.5 and 250 ms from a pink or
vocal source, grain intervals of 100/20/5/1 ms, routed to the horizontal
layer (2D) or the full hemisphere (3D).  Trial 5 fixes the densest setting
and varies the loudspeaker subset (SP/QP/L1/L1L2L3) and signal bandwidth
(broadband vs 1.8 kHz lowpass).  Experiment 2 fixes 250 ms grains every
5 ms and varies elevation layers, anchors (SP/ZEN) and bandwidth.

External sample sources are referenced by relative path and never bundled;
pink-noise conditions are self-contained.
"""

from __future__ import annotations

import csv
import io
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, FilterSpec, apply_lowpass, generate_pink_noise
from .errors import DataError, ParameterError
from .grains import GrainSchedule, SynthesisParams, render_binaural, render_discrete, schedule_grains
from .spatial import DirectionSubset, HrirSet, SpeakerLayout, builtin_subset
from .stats import holm_correction, wilcoxon_signed_rank
from .wavio import read_wav

RATING_MIN, RATING_MAX = 0.0, 100.0

#: Default relative paths for the unbundled sample sources.
VOCAL_SAMPLE = "samples/sqam-track48.wav"
TEXTURE_SAMPLE = "samples/concret-ph.wav"

LOWPASS_1K8 = FilterSpec(cutoff_hz=1800.0, order=12)


@dataclass(frozen=True)
class StimulusCondition:
    """One playable condition: source, optional lowpass, synthesis, subset."""

    id: str
    source: str  # 'pink' or a relative sample path
    lowpass: FilterSpec | None
    params: SynthesisParams
    subset: str
    duration_s: float = 2.0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "lowpass": None
            if self.lowpass is None
            else {"kind": self.lowpass.kind, "order": self.lowpass.order,
                  "cutoff_hz": self.lowpass.cutoff_hz},
            "params": self.params.to_dict(),
            "subset": self.subset,
            "duration_s": self.duration_s,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StimulusCondition":
        lp = doc.get("lowpass")
        return cls(
            id=doc["id"],
            source=doc["source"],
            lowpass=None if lp is None else FilterSpec(lp["cutoff_hz"], lp["order"], lp["kind"]),
            params=SynthesisParams.from_dict(doc["params"]),
            subset=doc["subset"],
            duration_s=doc["duration_s"],
        )


@dataclass(frozen=True)
class PresetBundle:
    """A trial's worth of conditions plus a human-readable note."""

    trial_id: str
    note: str
    conditions: tuple[StimulusCondition, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "trial_id": self.trial_id,
                "note": self.note,
                "conditions": [c.to_dict() for c in self.conditions],
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "PresetBundle":
        doc = json.loads(text)
        return cls(
            doc["trial_id"],
            doc["note"],
            tuple(StimulusCondition.from_dict(c) for c in doc["conditions"]),
        )


def _condition_seed(condition_id: str) -> int:
    """Stable per-condition seed derived from the condition id."""
    return zlib.crc32(condition_id.encode("utf-8"))


def _condition(
    trial: str,
    label: str,
    source: str,
    delta_t_s: float,
    grain_len_s: float,
    subset: str,
    lowpass: FilterSpec | None = None,
    duration_s: float = 2.0,
) -> StimulusCondition:
    cid = f"{trial}.{label}"
    params = SynthesisParams(
        delta_t_s=delta_t_s,
        grain_len_s=grain_len_s,
        seed_range_s=5.0,
        jitter_frac=0.01,
        window="hann",
        duration_s=duration_s,
        rng_seed=_condition_seed(cid),
    )
    return StimulusCondition(cid, source, lowpass, params, subset, duration_s)


def preset_experiment1() -> list[PresetBundle]:
    """Trials 1-5 of the first experiment (temporal and directional density)."""
    bundles = []
    sources = {"t1": ("pink", 0.0005), "t2": ("pink", 0.250),
               "t3": (VOCAL_SAMPLE, 0.0005), "t4": (VOCAL_SAMPLE, 0.250)}
    for trial, (source, grain_len) in sources.items():
        conds = []
        for dt_ms in (100, 20, 5, 1):
            for subset, tag in (("L1", "2d"), ("L1L2L3", "3d")):
                conds.append(
                    _condition(f"exp1.{trial}", f"dt{dt_ms}ms.{tag}", source,
                               dt_ms / 1000.0, grain_len, subset)
                )
        src_tag = "pink noise" if source == "pink" else "vocal sample"
        bundles.append(
            PresetBundle(
                f"exp1.{trial}",
                f"temporal density trial, {src_tag}, {grain_len * 1000:g} ms grains, "
                "2D (L1) vs 3D (L1L2L3) assignment",
                tuple(conds),
            )
        )
    t5 = []
    for subset in ("SP", "QP", "L1", "L1L2L3"):
        for lp, tag in ((None, "broadband"), (LOWPASS_1K8, "lowpass")):
            t5.append(
                _condition("exp1.t5", f"{subset}.{tag}", "pink", 0.001, 0.250, subset, lp)
            )
    bundles.append(
        PresetBundle(
            "exp1.t5",
            "directional density trial, stationary dense granulation "
            "(250 ms grains every 1 ms), broadband vs 1.8 kHz lowpass",
            tuple(t5),
        )
    )
    return bundles


def preset_experiment2() -> list[PresetBundle]:
    """Trials of the second experiment (elevation layers and bandwidth)."""
    iia_subsets = ("L1", "L2", "L3", "L1L2", "L2L3", "L1L2L3", "SP", "ZEN")
    iia = tuple(
        _condition("exp2.iia", f"{src_tag}.{subset}", source, 0.005, 0.250, subset)
        for source, src_tag in (("pink", "pink"), (TEXTURE_SAMPLE, "concret"))
        for subset in iia_subsets
    )
    bundles = [
        PresetBundle(
            "exp2.iia",
            "layer trial: 250 ms grains every 5 ms over layer subsets plus "
            "SP and ZEN anchors, per source (pink noise / texture sample)",
            iia,
        )
    ]
    iib = []
    for source, src_tag in (("pink", "pink"), (TEXTURE_SAMPLE, "concret")):
        for subset in ("L1", "L2L3", "L3"):
            for lp, tag in ((None, "broadband"), (LOWPASS_1K8, "lowpass")):
                iib.append(
                    _condition("exp2.iib", f"{src_tag}.{subset}.{tag}", source,
                               0.005, 0.250, subset, lp)
                )
        for subset in ("SP", "ZEN"):
            iib.append(
                _condition("exp2.iib", f"{src_tag}.{subset}.broadband", source,
                           0.005, 0.250, subset)
            )
    bundles.append(
        PresetBundle(
            "exp2.iib",
            "bandwidth trial: broadband vs 1.8 kHz lowpass over L1/L2L3/L3 "
            "with SP and ZEN anchors, per source",
            tuple(iib),
        )
    )
    return bundles


def all_presets() -> dict[str, PresetBundle]:
    """All bundles keyed by trial id."""
    return {b.trial_id: b for b in preset_experiment1() + preset_experiment2()}


def load_condition_source(
    condition: StimulusCondition,
    sample_rate: int,
    samples_dir: str | Path | None = None,
) -> AudioBuffer:
    """Resolve a condition's source buffer (possibly lowpass-filtered)."""
    p = condition.params
    if condition.source == "pink":
        duration = max(10.0, p.seed_range_s + p.grain_len_s + 0.5)
        # Distinct stream from the schedule RNG, still derived from one seed.
        src = generate_pink_noise(duration, sample_rate, seed=(p.rng_seed ^ 0x9E3779B9))
    else:
        path = Path(samples_dir or ".") / condition.source
        if not path.exists():
            raise DataError(
                f"condition {condition.id}: sample source {path} is missing "
                "(external samples are not bundled)"
            )
        src = read_wav(path)
        if src.channels != 1:
            src = AudioBuffer(src.samples.mean(axis=0), src.sample_rate)
        if src.sample_rate != sample_rate:
            raise ParameterError(
                f"condition {condition.id}: sample rate {src.sample_rate} != {sample_rate}"
            )
        need = p.seed_range_s + p.grain_len_s
        if src.duration_s < need:
            raise DataError(
                f"condition {condition.id}: sample shorter than Q + L = {need:.2f} s"
            )
    if condition.lowpass is not None:
        src = apply_lowpass(src, condition.lowpass)
    return src


def render_condition(
    condition: StimulusCondition,
    sample_rate: int = 48000,
    layout: SpeakerLayout | None = None,
    hrirs: HrirSet | None = None,
    samples_dir: str | Path | None = None,
    threads: int | None = None,
) -> tuple[AudioBuffer, GrainSchedule]:
    """Render a condition to loudspeaker channels or, with ``hrirs``, to ears."""
    source = load_condition_source(condition, sample_rate, samples_dir)
    subset = builtin_subset(condition.subset, layout)
    schedule = schedule_grains(condition.params, subset)
    if hrirs is not None:
        out = render_binaural(source, schedule, hrirs, threads=threads)
    else:
        out = render_discrete(source, schedule, subset, threads=threads)
    return out, schedule


@dataclass(frozen=True)
class RatingTable:
    """participant x condition -> rating in [0, 100]."""

    participants: tuple[str, ...]
    conditions: tuple[str, ...]
    ratings: dict

    def __post_init__(self) -> None:
        for (participant, condition), value in self.ratings.items():
            if not (RATING_MIN <= value <= RATING_MAX):
                raise DataError(
                    f"rating {value} for ({participant}, {condition}) outside "
                    f"[{RATING_MIN}, {RATING_MAX}]"
                )

    def column(self, condition: str) -> np.ndarray:
        """Ratings of one condition ordered by participant; errors if incomplete."""
        if condition not in self.conditions:
            raise DataError(f"unknown condition {condition!r}")
        out = []
        for p in self.participants:
            key = (p, condition)
            if key not in self.ratings:
                raise DataError(f"missing rating for ({p}, {condition})")
            out.append(self.ratings[key])
        return np.array(out)


def load_ratings_csv(path: str | Path) -> RatingTable:
    """Read a ratings CSV with header ``participant,condition,rating``."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0][:3]] != ["participant", "condition", "rating"]:
        raise DataError(f"{path}: expected header 'participant,condition,rating'")
    participants: list[str] = []
    conditions: list[str] = []
    ratings = {}
    for row in rows[1:]:
        if not row:
            continue
        if len(row) < 3:
            raise DataError(f"{path}: malformed row {row!r}")
        participant, condition, value = row[0].strip(), row[1].strip(), float(row[2])
        if participant not in participants:
            participants.append(participant)
        if condition not in conditions:
            conditions.append(condition)
        ratings[(participant, condition)] = value
    return RatingTable(tuple(participants), tuple(conditions), ratings)


@dataclass(frozen=True)
class ContrastFamily:
    """A set of pairwise contrasts corrected together."""

    name: str
    pairs: tuple[tuple[str, str], ...]


def load_contrasts_json(path: str | Path) -> list[ContrastFamily]:
    """Read contrast families: [{"name": ..., "pairs": [[a, b], ...]}, ...]."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list):
        raise DataError(f"{path}: expected a list of contrast families")
    families = []
    for entry in doc:
        try:
            families.append(
                ContrastFamily(entry["name"], tuple((a, b) for a, b in entry["pairs"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: malformed family entry: {exc}") from exc
    return families


def reanalyze_ratings(
    table: RatingTable,
    contrasts: list[ContrastFamily],
    alternative: str = "two-sided",
) -> list[dict]:
    """Wilcoxon signed-rank per contrast, Holm-corrected within each family.

    Returns one record per contrast with raw and corrected p-values.
    """
    results = []
    for family in contrasts:
        raw = []
        for a, b in family.pairs:
            raw.append(
                wilcoxon_signed_rank(table.column(a), table.column(b), alternative)
            )
        corrected = holm_correction(raw)
        for (a, b), p_raw, p_holm in zip(family.pairs, raw, corrected):
            results.append(
                {"family": family.name, "condition_a": a, "condition_b": b,
                 "p_raw": p_raw, "p_holm": p_holm}
            )
    return results


def results_to_csv(results: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["family", "condition_a", "condition_b", "p_raw", "p_holm"])
    for r in results:
        writer.writerow(
            [r["family"], r["condition_a"], r["condition_b"],
             f"{r['p_raw']:.6g}", f"{r['p_holm']:.6g}"]
        )
    return out.getvalue()
