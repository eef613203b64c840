"""Sparse FIR reduction of grain schedules.

With a unity window and all read offsets removed, the grain engine becomes
a linear time-invariant sparse FIR system: one tap per grain at lag tau
with unit coefficient, normalized by G = sqrt(sum h^2).  This module holds
that reduction and a direct sparse-convolution renderer, so the identity
can be verified against the grain engine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .errors import ParameterError
from .grains import GrainSchedule, _resolve_channel_indices, _round_half_up
from .spatial import Direction, DirectionSubset, SpeakerLayout


@dataclass(frozen=True)
class FirTapSet:
    """Sparse multichannel FIR: (lag seconds, channel, coefficient) triples."""

    lags_s: tuple[float, ...]
    channels: tuple[int, ...]
    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lags_s", tuple(float(v) for v in self.lags_s))
        object.__setattr__(self, "channels", tuple(int(v) for v in self.channels))
        object.__setattr__(self, "coefficients", tuple(float(v) for v in self.coefficients))
        if not len(self.lags_s) == len(self.channels) == len(self.coefficients):
            raise ParameterError("lags, channels, coefficients must have equal length")
        if any(lag < 0 for lag in self.lags_s):
            raise ParameterError("tap lags must be non-negative")

    def __len__(self) -> int:
        return len(self.lags_s)

    @property
    def gain(self) -> float:
        """Normalization G = sqrt(sum of squared coefficients)."""
        return float(np.sqrt(np.sum(np.square(self.coefficients))))

    def to_json(self) -> str:
        taps = [
            {"lag_s": lag, "channel": ch, "h": h}
            for lag, ch, h in zip(self.lags_s, self.channels, self.coefficients)
        ]
        return json.dumps({"taps": taps}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FirTapSet":
        taps = json.loads(text)["taps"]
        return cls(
            tuple(t["lag_s"] for t in taps),
            tuple(t["channel"] for t in taps),
            tuple(t["h"] for t in taps),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def reduce_schedule_to_fir(
    schedule: GrainSchedule,
    assignment: DirectionSubset | SpeakerLayout | None = None,
) -> FirTapSet:
    """One unit tap per grain event at lag tau on the event's channel.

    Window shape and read offsets are discarded by definition.  Direction
    targets need ``assignment`` to resolve to channel indices; schedules
    with integer targets reduce standalone.
    """
    if any(isinstance(e.target, Direction) for e in schedule.events):
        if assignment is None:
            raise ParameterError(
                "schedule has Direction targets; pass the assignment subset/layout"
            )
        channels = _resolve_channel_indices(schedule, assignment)
    else:
        channels = [int(e.target) for e in schedule.events]
    lags = tuple(e.onset_s for e in schedule.events)
    return FirTapSet(lags, tuple(channels), (1.0,) * len(schedule.events))


def apply_sparse_fir(
    source: AudioBuffer,
    taps: FirTapSet,
    num_channels: int,
) -> AudioBuffer:
    """y[ch](t) = (1/G) * sum over taps on ch of h * x(t - lag).

    Lags are quantized to integer samples with round-half-up; lags further
    than 1e-6 samples from the grid are rejected.
    """
    if source.channels != 1:
        raise ParameterError(f"source must be mono, got {source.channels} channels")
    if num_channels < 1:
        raise ParameterError("num_channels must be >= 1")
    x = source.mono
    sr = source.sample_rate
    lag_samples = []
    for lag in taps.lags_s:
        exact = lag * sr
        rounded = _round_half_up(exact)
        if abs(exact - rounded) > 1e-6:
            raise ParameterError(
                f"tap lag {lag} s is not representable at {sr} Hz (sub-sample lag)"
            )
        lag_samples.append(rounded)
    for ch in taps.channels:
        if ch >= num_channels:
            raise ParameterError(f"tap channel {ch} >= num_channels {num_channels}")

    n = len(x)
    max_lag = max(lag_samples, default=0)
    out = np.zeros((num_channels, n + max_lag))
    for lag, ch, h in zip(lag_samples, taps.channels, taps.coefficients):
        out[ch, lag : lag + n] += h * x
    g = taps.gain
    if g > 0:
        out /= g
    return AudioBuffer(out, sr)
