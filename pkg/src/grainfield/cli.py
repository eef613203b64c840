"""Command-line entry point: render, analyze, reference, presets, stats.

Every command writes a ``*.config.json`` next to its outputs containing
the fully resolved argument vector, so any output directory can be
regenerated bit-exactly by replaying that vector.  Time flags use
milliseconds for the grain interval and grain length (``--dt-ms`` and
``--len-ms``) and seconds for durations.  Exit codes: 0 success,
2 parameter error, 3 data/format error, 4 statistics error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .audio import FilterSpec, apply_lowpass, generate_pink_noise
from .cues import (
    CueSummary,
    analyze_signal,
    default_bank,
    frames_to_csv,
    simulate_diffuse_reference,
    summarize_with_bank,
)
from .errors import DataError, FormatError, ParameterError, StatisticsError
from .grains import SynthesisParams, render_binaural, render_discrete, schedule_grains
from .presets import (
    all_presets,
    load_contrasts_json,
    load_ratings_csv,
    reanalyze_ratings,
    render_condition,
    results_to_csv,
)
from .spatial import builtin_layout_cube25, builtin_subset, load_hrir_manifest
from .wavio import read_wav, write_wav

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_DATA = 3
EXIT_STATISTICS = 4


def _write_config(out_dir: Path, command: str, argv: list[str]) -> None:
    config = {"command": command, "argv": argv, "version": __version__}
    (out_dir / f"{command}.config.json").write_text(json.dumps(config, indent=1))


def _add_render_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", default="pink", help="'pink' or a mono WAV path")
    p.add_argument("--dt-ms", type=float, required=True, help="time between grains, ms")
    p.add_argument("--len-ms", type=float, required=True, help="grain length, ms")
    p.add_argument("--seed-range-s", type=float, default=5.0, help="grain read-offset span Q, s")
    p.add_argument("--jitter-frac", type=float, default=0.01, help="onset jitter as fraction of dt")
    p.add_argument("--window", default="hann", choices=("hann", "rect"))
    p.add_argument("--subset", default="L1L2L3", help="direction subset name")
    p.add_argument("--dur-s", type=float, default=2.0, help="schedule duration, s")
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--sample-rate", type=int, default=48000)
    p.add_argument("--lowpass-hz", type=float, default=None,
                   help="apply a 12th-order Butterworth lowpass to the source")
    p.add_argument("--binaural", action="store_true", help="render to two ears via HRIRs")
    p.add_argument("--hrir", default=None, help="HRIR manifest JSON (required with --binaural)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--name", default="render", help="output file stem")


def _cmd_render(args: argparse.Namespace, argv: list[str]) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sr = args.sample_rate
    params = SynthesisParams(
        delta_t_s=args.dt_ms / 1000.0,
        grain_len_s=args.len_ms / 1000.0,
        seed_range_s=args.seed_range_s,
        jitter_frac=args.jitter_frac,
        window=args.window,
        duration_s=args.dur_s,
        rng_seed=args.seed,
    )
    if args.source == "pink":
        duration = max(10.0, params.seed_range_s + params.grain_len_s + 0.5)
        source = generate_pink_noise(duration, sr, seed=args.seed ^ 0x9E3779B9)
    else:
        source = read_wav(args.source)
        if source.channels != 1:
            raise ParameterError(f"source {args.source} must be mono")
        if source.sample_rate != sr:
            raise ParameterError(
                f"source rate {source.sample_rate} != requested rate {sr} "
                "(mixed rates are rejected, not resampled)"
            )
    if args.lowpass_hz is not None:
        source = apply_lowpass(source, FilterSpec(args.lowpass_hz, 12))

    subset = builtin_subset(args.subset, builtin_layout_cube25())
    schedule = schedule_grains(params, subset)
    if args.binaural:
        if not args.hrir:
            raise ParameterError("--binaural requires --hrir MANIFEST")
        hrirs = load_hrir_manifest(args.hrir)
        rendered = render_binaural(source, schedule, hrirs)
    else:
        rendered = render_discrete(source, schedule, subset)
    write_wav(rendered, out_dir / f"{args.name}.wav")
    schedule.save(out_dir / f"{args.name}.schedule.json")
    _write_config(out_dir, "render", argv)
    print(f"wrote {out_dir / (args.name + '.wav')} ({rendered.channels} ch)")
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace, argv: list[str]) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stereo = read_wav(args.input)
    if stereo.channels != 2:
        raise ParameterError(f"{args.input}: need a stereo file, got {stereo.channels} channels")
    bank = default_bank(stereo.sample_rate, args.block_ms / 1000.0)
    reference = None
    if args.reference:
        reference = CueSummary.load(args.reference)
        if len(reference.mean_xi_left_db) != len(bank):
            raise ParameterError(
                f"reference has {len(reference.mean_xi_left_db)} bands, analyzer has {len(bank)}"
            )
    frames = analyze_signal(stereo, bank, args.block_ms / 1000.0)
    summary = summarize_with_bank(frames, bank, reference)
    (out_dir / f"{args.name}.frames.csv").write_text(frames_to_csv(frames, bank))
    summary.save(out_dir / f"{args.name}.summary.csv")
    _write_config(out_dir, "analyze", argv)
    print(f"wrote {out_dir / (args.name + '.summary.csv')} ({len(bank)} bands)")
    return EXIT_OK


def _cmd_reference(args: argparse.Namespace, argv: list[str]) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    hrirs = load_hrir_manifest(args.hrir)
    reference = simulate_diffuse_reference(hrirs, args.dur_s, seed=args.seed)
    bank = default_bank(hrirs.sample_rate, args.block_ms / 1000.0)
    frames = analyze_signal(reference, bank, args.block_ms / 1000.0)
    summary = summarize_with_bank(frames, bank)
    write_wav(reference, out_dir / f"{args.name}.wav")
    summary.save(out_dir / f"{args.name}.summary.csv")
    _write_config(out_dir, "reference", argv)
    print(f"wrote {out_dir / (args.name + '.wav')} and cue summary")
    return EXIT_OK


def _cmd_presets(args: argparse.Namespace, argv: list[str]) -> int:
    presets = all_presets()
    if args.action == "list":
        for trial_id, bundle in presets.items():
            print(f"{trial_id}: {len(bundle.conditions)} conditions - {bundle.note}")
        return EXIT_OK
    if args.trial not in presets:
        raise ParameterError(
            f"unknown trial {args.trial!r}; available: {', '.join(presets)}"
        )
    bundle = presets[args.trial]
    if args.action == "show":
        print(bundle.to_json())
        return EXIT_OK
    # render
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    hrirs = load_hrir_manifest(args.hrir) if args.hrir else None
    layout = builtin_layout_cube25()
    rendered = 0
    for condition in bundle.conditions:
        if args.only and args.only not in condition.id:
            continue
        out, schedule = render_condition(
            condition, args.sample_rate, layout, hrirs, samples_dir=args.samples_dir
        )
        write_wav(out, out_dir / f"{condition.id}.wav")
        schedule.save(out_dir / f"{condition.id}.schedule.json")
        rendered += 1
    (out_dir / f"{bundle.trial_id}.bundle.json").write_text(bundle.to_json())
    _write_config(out_dir, "presets", argv)
    print(f"rendered {rendered} conditions of {bundle.trial_id} to {out_dir}")
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace, argv: list[str]) -> int:
    table = load_ratings_csv(args.ratings)
    contrasts = load_contrasts_json(args.contrasts)
    results = reanalyze_ratings(table, contrasts, alternative=args.alternative)
    csv_text = results_to_csv(results)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "stats.csv").write_text(csv_text)
        _write_config(out_dir, "stats", argv)
        print(f"wrote {out_dir / 'stats.csv'}")
    else:
        print(csv_text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grainfield",
        description="Spatial granular synthesis and binaural cue analysis.",
    )
    parser.add_argument("--version", action="version", version=f"grainfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a granular stimulus to WAV")
    _add_render_args(p)

    p = sub.add_parser("analyze", help="compute binaural cues of a stereo WAV")
    p.add_argument("--input", required=True, help="stereo WAV path")
    p.add_argument("--reference", default=None, help="reference summary CSV for delta spectrum")
    p.add_argument("--block-ms", type=float, default=85.0)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="cues")

    p = sub.add_parser("reference", help="simulate the 2D diffuse-field reference")
    p.add_argument("--hrir", required=True, help="360-direction HRIR manifest")
    p.add_argument("--dur-s", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block-ms", type=float, default=85.0)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="reference")

    p = sub.add_parser("presets", help="list, show or render experiment presets")
    p.add_argument("action", choices=("list", "show", "render"))
    p.add_argument("trial", nargs="?", default=None, help="trial id (for show/render)")
    p.add_argument("--out", default="presets-out")
    p.add_argument("--sample-rate", type=int, default=48000)
    p.add_argument("--hrir", default=None, help="render binaurally via this manifest")
    p.add_argument("--samples-dir", default=None, help="directory with external samples")
    p.add_argument("--only", default=None, help="render only condition ids containing this substring")

    p = sub.add_parser("stats", help="re-analyze a rating table with Wilcoxon + Holm")
    p.add_argument("--ratings", required=True, help="CSV: participant,condition,rating")
    p.add_argument("--contrasts", required=True, help="JSON list of contrast families")
    p.add_argument("--alternative", default="two-sided",
                   choices=("two-sided", "greater", "less"))
    p.add_argument("--out", default=None, help="output directory (default: print)")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "render":
            return _cmd_render(args, argv)
        if args.command == "analyze":
            return _cmd_analyze(args, argv)
        if args.command == "reference":
            return _cmd_reference(args, argv)
        if args.command == "presets":
            if args.action in ("show", "render") and not args.trial:
                raise ParameterError(f"presets {args.action} requires a trial id")
            return _cmd_presets(args, argv)
        if args.command == "stats":
            return _cmd_stats(args, argv)
        raise ParameterError(f"unknown command {args.command!r}")
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (FormatError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StatisticsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATISTICS


if __name__ == "__main__":
    sys.exit(main())
