"""grainfield: spatial granular synthesis and binaural cue analysis."""

from .audio import AudioBuffer, FilterSpec, apply_lowpass, generate_pink_noise
from .cues import (
    CueFrame,
    CueSummary,
    GammatoneBank,
    analyze_block,
    analyze_signal,
    build_gammatone_bank,
    default_bank,
    erb_hz,
    erb_rate,
    simulate_diffuse_reference,
    summarize,
    summarize_with_bank,
)
from .errors import (
    DataError,
    FormatError,
    GrainfieldError,
    ParameterError,
    ScheduleError,
    StatisticsError,
)
from .firbridge import FirTapSet, apply_sparse_fir, reduce_schedule_to_fir
from .grains import (
    GrainEvent,
    GrainSchedule,
    SynthesisParams,
    compensation_gain,
    make_window,
    render_binaural,
    render_discrete,
    schedule_grains,
)
from .headmodel import HeadModel, synthetic_hrir_set, write_hrir_manifest
from .presets import (
    ContrastFamily,
    PresetBundle,
    RatingTable,
    StimulusCondition,
    all_presets,
    load_ratings_csv,
    preset_experiment1,
    preset_experiment2,
    reanalyze_ratings,
    render_condition,
)
from .stats import holm_correction, wilcoxon_signed_rank
from .spatial import (
    Direction,
    DirectionSubset,
    HrirSet,
    SpeakerLayout,
    builtin_layout_cube25,
    builtin_subset,
    great_circle_deg,
    load_hrir_manifest,
    nearest_direction,
)
from .wavio import read_wav, write_wav

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "FilterSpec",
    "apply_lowpass",
    "generate_pink_noise",
    "read_wav",
    "write_wav",
    "Direction",
    "DirectionSubset",
    "SpeakerLayout",
    "HrirSet",
    "builtin_layout_cube25",
    "builtin_subset",
    "great_circle_deg",
    "load_hrir_manifest",
    "nearest_direction",
    "HeadModel",
    "synthetic_hrir_set",
    "write_hrir_manifest",
    "SynthesisParams",
    "GrainEvent",
    "GrainSchedule",
    "make_window",
    "compensation_gain",
    "schedule_grains",
    "render_discrete",
    "render_binaural",
    "FirTapSet",
    "reduce_schedule_to_fir",
    "apply_sparse_fir",
    "GammatoneBank",
    "CueFrame",
    "CueSummary",
    "erb_hz",
    "erb_rate",
    "build_gammatone_bank",
    "default_bank",
    "analyze_block",
    "analyze_signal",
    "summarize",
    "summarize_with_bank",
    "simulate_diffuse_reference",
    "StimulusCondition",
    "PresetBundle",
    "RatingTable",
    "ContrastFamily",
    "all_presets",
    "preset_experiment1",
    "preset_experiment2",
    "render_condition",
    "load_ratings_csv",
    "reanalyze_ratings",
    "wilcoxon_signed_rank",
    "holm_correction",
    "GrainfieldError",
    "ParameterError",
    "ScheduleError",
    "FormatError",
    "DataError",
    "StatisticsError",
]
