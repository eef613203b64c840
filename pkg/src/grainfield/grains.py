"""Grain scheduling, windowing, and multichannel/binaural rendering.

A schedule places windowed grains (length L) every delta_t seconds, reads
each grain from a random offset q in [0, Q] of a mono source buffer, and
routes it to one direction of a subset.  Rendering divides by the overlap
compensation gain

    G = sqrt(L / delta_t) * sqrt(mean(w^2))

so the long-term output loudness is independent of the grain density,
assuming uncorrelated grains.  Samples read past the source are zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.signal import fftconvolve

from ._parallel import ordered_map
from .audio import DEFAULT_SAMPLE_RATE, AudioBuffer
from .errors import ParameterError, ScheduleError
from .spatial import Direction, DirectionSubset, HrirSet, SpeakerLayout, nearest_direction

WINDOW_KINDS = ("hann", "rect")


@dataclass(frozen=True)
class SynthesisParams:
    """Knobs of the grain engine.

    delta_t_s   time between grain onsets
    grain_len_s grain length L
    seed_range_s span Q of random read offsets into the source
    jitter_frac  onset jitter as a fraction of delta_t (uniform, symmetric)
    window       'hann' or 'rect'
    duration_s   schedule duration (onsets lie in [0, duration_s))
    rng_seed     master seed for jitter, read offsets and target choice
    """

    delta_t_s: float
    grain_len_s: float
    seed_range_s: float = 5.0
    jitter_frac: float = 0.0
    window: str = "hann"
    duration_s: float = 2.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.delta_t_s <= 0:
            raise ParameterError(f"delta_t_s must be positive, got {self.delta_t_s}")
        if self.grain_len_s <= 0:
            raise ParameterError(f"grain_len_s must be positive, got {self.grain_len_s}")
        if self.seed_range_s < 0:
            raise ParameterError(f"seed_range_s must be >= 0, got {self.seed_range_s}")
        if not 0.0 <= self.jitter_frac <= 1.0:
            raise ParameterError(f"jitter_frac must be in [0, 1], got {self.jitter_frac}")
        if self.window not in WINDOW_KINDS:
            raise ParameterError(f"unknown window {self.window!r}")
        if self.duration_s <= 0:
            raise ParameterError(f"duration_s must be positive, got {self.duration_s}")

    @property
    def overlap(self) -> float:
        """Spatio-temporal grain overlap: average number of active grains."""
        return self.grain_len_s / self.delta_t_s

    def to_dict(self) -> dict:
        return {
            "delta_t_s": self.delta_t_s,
            "grain_len_s": self.grain_len_s,
            "seed_range_s": self.seed_range_s,
            "jitter_frac": self.jitter_frac,
            "window": self.window,
            "duration_s": self.duration_s,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthesisParams":
        return cls(**doc)


@dataclass(frozen=True)
class GrainEvent:
    """One grain: onset time, source read offset, render target.

    ``target`` is either a channel index (int) or a Direction.
    """

    onset_s: float
    seed_s: float
    target: int | Direction

    def __post_init__(self) -> None:
        if self.onset_s < 0:
            raise ParameterError(f"onset_s must be >= 0, got {self.onset_s}")
        if self.seed_s < 0:
            raise ParameterError(f"seed_s must be >= 0, got {self.seed_s}")


@dataclass(frozen=True)
class GrainSchedule:
    """The realized sequence of grain events plus the generating params."""

    events: tuple[GrainEvent, ...]
    params: SynthesisParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        onsets = [e.onset_s for e in self.events]
        if any(b < a for a, b in zip(onsets, onsets[1:])):
            raise ParameterError("event onsets must be non-decreasing")
        q = self.params.seed_range_s
        if any(e.seed_s > q * (1 + 1e-12) for e in self.events):
            raise ParameterError("event seed offsets exceed the seed range")

    def __len__(self) -> int:
        return len(self.events)

    def to_json(self) -> str:
        events = []
        for e in self.events:
            if isinstance(e.target, Direction):
                target = {"az_deg": e.target.azimuth_deg, "el_deg": e.target.elevation_deg}
            else:
                target = int(e.target)
            events.append({"onset_s": e.onset_s, "seed_s": e.seed_s, "target": target})
        return json.dumps({"params": self.params.to_dict(), "events": events}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GrainSchedule":
        doc = json.loads(text)
        params = SynthesisParams.from_dict(doc["params"])
        events = []
        for e in doc["events"]:
            target = e["target"]
            if isinstance(target, dict):
                target = Direction(target["az_deg"], target["el_deg"])
            events.append(GrainEvent(e["onset_s"], e["seed_s"], target))
        return cls(tuple(events), params)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "GrainSchedule":
        return cls.from_json(Path(path).read_text())


def make_window(kind: str, grain_len_s: float, sample_rate: int) -> NDArray[np.float64]:
    """Window samples at t = n/sr for 0 <= t <= L (both endpoints included).

    The grain length is quantized to M = round(L * sr) sample intervals;
    the Hann window is sin^2(pi n / M), the rectangular window is all ones.
    """
    if kind not in WINDOW_KINDS:
        raise ParameterError(f"unknown window {kind!r}")
    m = int(round(grain_len_s * sample_rate))
    if m < 2:
        raise ParameterError(
            f"grain_len_s * sample_rate must be >= 2, got {grain_len_s * sample_rate:.3f}"
        )
    if kind == "rect":
        return np.ones(m + 1)
    n = np.arange(m + 1, dtype=np.float64)
    return np.square(np.sin(np.pi * n / m))


def window_mean_square(window: NDArray[np.float64]) -> float:
    """Trapezoidal mean of w^2 over the window span."""
    w2 = np.square(window)
    return float(np.trapezoid(w2) / (len(window) - 1))


def compensation_gain(params: SynthesisParams, sample_rate: int = DEFAULT_SAMPLE_RATE) -> float:
    """Overlap compensation G = sqrt(L/dt) * sqrt(mean(w^2)), discrete window."""
    w = make_window(params.window, params.grain_len_s, sample_rate)
    return float(np.sqrt(params.overlap) * np.sqrt(window_mean_square(w)))


def schedule_grains(
    params: SynthesisParams,
    assignment: DirectionSubset | SpeakerLayout,
    rng: np.random.Generator | None = None,
) -> GrainSchedule:
    """Draw a schedule: jittered periodic onsets, uniform read offsets,
    uniformly random targets over the assignment members.

    Onsets are l*dt + U(-j*dt, +j*dt), clipped at zero; with j <= 0.5 the
    grid order is preserved, for larger jitter events are re-sorted so
    onsets stay non-decreasing.  Targets are sampled independently per
    event (with replacement) and stored as Directions.
    """
    if len(assignment) == 0:
        raise ParameterError("assignment subset is empty")
    rng = rng if rng is not None else np.random.default_rng(params.rng_seed)
    directions = assignment.directions

    n_events = int(np.ceil(params.duration_s / params.delta_t_s - 1e-9))
    grid = np.arange(n_events, dtype=np.float64) * params.delta_t_s
    if params.jitter_frac > 0:
        jitter = rng.uniform(-1.0, 1.0, n_events) * params.jitter_frac * params.delta_t_s
        onsets = np.maximum(grid + jitter, 0.0)
    else:
        onsets = grid
    seeds = rng.uniform(0.0, params.seed_range_s, n_events) if params.seed_range_s > 0 else np.zeros(n_events)
    choices = rng.integers(0, len(directions), n_events)
    if params.jitter_frac > 0.5:
        order = np.argsort(onsets, kind="stable")
        onsets, seeds, choices = onsets[order], seeds[order], choices[order]

    events = tuple(
        GrainEvent(float(t), float(q), directions[int(c)])
        for t, q, c in zip(onsets, seeds, choices)
    )
    return GrainSchedule(events, params)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _resolve_channel_indices(
    schedule: GrainSchedule, layout: SpeakerLayout | DirectionSubset
) -> list[int]:
    """Map event targets to channel indices of ``layout``.

    Integer targets index directly; Direction targets resolve to the
    nearest layout direction (exact members hit their own entry).
    """
    dirs = layout.directions
    exact = {}
    for i, d in enumerate(dirs):
        exact.setdefault((d.azimuth_deg, d.elevation_deg), i)
    indices = []
    for e in schedule.events:
        if isinstance(e.target, Direction):
            key = (e.target.azimuth_deg, e.target.elevation_deg)
            idx = exact.get(key)
            if idx is None:
                idx = nearest_direction(layout, e.target)
            indices.append(idx)
        else:
            idx = int(e.target)
            if not 0 <= idx < len(dirs):
                raise ScheduleError(
                    f"target channel {idx} out of range for {len(dirs)} channels"
                )
            indices.append(idx)
    return indices


def _grain_source_segment(
    x: NDArray[np.float64], start: int, length: int
) -> NDArray[np.float64]:
    """x[start : start+length] with zeros outside the buffer."""
    n = len(x)
    if start >= 0 and start + length <= n:
        return x[start : start + length]
    seg = np.zeros(length)
    lo = max(start, 0)
    hi = min(start + length, n)
    if hi > lo:
        seg[lo - start : hi - start] = x[lo:hi]
    return seg


def _check_source(source: AudioBuffer, params: SynthesisParams) -> None:
    if source.channels != 1:
        raise ParameterError(f"source must be mono, got {source.channels} channels")
    need = params.seed_range_s + params.grain_len_s
    if source.duration_s + 1e-9 < need:
        raise ParameterError(
            f"source of {source.duration_s:.3f} s is shorter than Q + L = {need:.3f} s"
        )


def _render_lanes(
    source: AudioBuffer,
    schedule: GrainSchedule,
    indices: list[int],
    out_len: int,
    window: NDArray[np.float64],
) -> "dict[int, NDArray[np.float64]]":
    """Scatter windowed grains into one float64 lane per used channel."""
    x = source.mono
    sr = source.sample_rate
    m = len(window)
    lanes: dict[int, NDArray[np.float64]] = {}
    for e, idx in zip(schedule.events, indices):
        n0 = _round_half_up(e.onset_s * sr)
        q = _round_half_up(e.seed_s * sr)
        lane = lanes.get(idx)
        if lane is None:
            lane = lanes[idx] = np.zeros(out_len)
        lane[n0 : n0 + m] += window * _grain_source_segment(x, q, m)
    return lanes


def _output_length(schedule: GrainSchedule, sample_rate: int, m: int) -> int:
    nominal = int(round(schedule.params.duration_s * sample_rate))
    if not schedule.events:
        return nominal
    last = max(_round_half_up(e.onset_s * sample_rate) for e in schedule.events)
    return max(nominal, last + m)


def render_discrete(
    source: AudioBuffer,
    schedule: GrainSchedule,
    layout: SpeakerLayout | DirectionSubset,
    gain_override: float | None = None,
    threads: int | None = None,
) -> AudioBuffer:
    """Render a schedule to one output channel per layout/subset member.

    Each grain adds w(t - tau) * x(t - tau + q) / G to exactly one channel.
    Grains extending past the schedule duration are rendered in full, so
    the output may be up to one grain length longer than duration_s.
    """
    _check_source(source, schedule.params)
    indices = _resolve_channel_indices(schedule, layout)
    window = make_window(schedule.params.window, schedule.params.grain_len_s, source.sample_rate)
    window = window[:-1]  # grain support is [0, L): final (zero for hann) sample dropped
    out_len = _output_length(schedule, source.sample_rate, len(window))
    n_ch = len(layout)

    gain = compensation_gain(schedule.params, source.sample_rate) if gain_override is None else gain_override
    lanes = _render_lanes(source, schedule, indices, out_len, window)
    out = np.zeros((n_ch, out_len))
    for idx in sorted(lanes):
        out[idx] = lanes[idx]
    out /= gain
    return AudioBuffer(out, source.sample_rate)


def render_binaural(
    source: AudioBuffer,
    schedule: GrainSchedule,
    hrirs: HrirSet,
    gain_override: float | None = None,
    threads: int | None = None,
) -> AudioBuffer:
    """Render a schedule to two ears by convolving each grain with the
    HRIR pair of its nearest direction.

    Grains are grouped per HRIR entry into mono lanes; each lane is
    convolved once with the entry's left/right responses and the results
    are summed in entry order, so the output does not depend on the worker
    count.
    """
    _check_source(source, schedule.params)
    if hrirs.sample_rate != source.sample_rate:
        raise ParameterError(
            f"HRIR rate {hrirs.sample_rate} != source rate {source.sample_rate}"
        )
    indices = _resolve_channel_indices(schedule, hrirs)
    window = make_window(schedule.params.window, schedule.params.grain_len_s, source.sample_rate)
    window = window[:-1]
    out_len = _output_length(schedule, source.sample_rate, len(window))
    gain = compensation_gain(schedule.params, source.sample_rate) if gain_override is None else gain_override

    lanes = _render_lanes(source, schedule, indices, out_len, window)
    used = sorted(lanes)
    total = out_len + hrirs.ir_length - 1

    def _convolve(idx: int) -> NDArray[np.float64]:
        lane = lanes[idx]
        pair = np.empty((2, total))
        pair[0] = fftconvolve(lane, hrirs.left[idx])
        pair[1] = fftconvolve(lane, hrirs.right[idx])
        return pair

    out = np.zeros((2, total))
    for pair in ordered_map(_convolve, used, threads):
        out += pair
    out /= gain
    return AudioBuffer(out, source.sample_rate)
