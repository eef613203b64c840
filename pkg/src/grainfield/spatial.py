"""Directions, loudspeaker layouts, direction subsets, HRIR datasets.

Azimuth is measured in degrees counterclockwise from the front and stored
canonically in [-180, 180); elevation in [-90, 90].  At the poles the
azimuth is canonicalized to 0 so equality is testable.  All containers are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import DataError, ParameterError
from .wavio import read_wav

LAYER_TAGS = ("L1", "L2", "L3")

#: Named subsets that can be built without a loudspeaker layout.
DIRECTION_SUBSETS = ("SP", "QP", "ZEN", "RING360")

#: Named subsets defined as unions of layout layers.
LAYER_SUBSETS = ("L1", "L2", "L3", "L1L2", "L2L3", "L1L2L3")


@dataclass(frozen=True)
class Direction:
    """A direction on the unit sphere (radius is fixed at 1)."""

    azimuth_deg: float
    elevation_deg: float

    def __post_init__(self) -> None:
        el = float(self.elevation_deg)
        if not -90.0 <= el <= 90.0:
            raise ParameterError(f"elevation {el} outside [-90, 90]")
        az = float(self.azimuth_deg)
        az = math.remainder(az, 360.0)  # -> (-180, 180]
        if az == 180.0:
            az = -180.0
        if abs(el) == 90.0:
            az = 0.0
        az += 0.0  # normalize -0.0 to +0.0
        object.__setattr__(self, "azimuth_deg", az)
        object.__setattr__(self, "elevation_deg", el)

    def unit_vector(self) -> NDArray[np.float64]:
        """Cartesian unit vector: x front, y left, z up."""
        az = math.radians(self.azimuth_deg)
        el = math.radians(self.elevation_deg)
        return np.array(
            [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
        )


def great_circle_deg(a: Direction, b: Direction) -> float:
    """Great-circle angle between two directions, in degrees.

    Uses the spherical law of cosines with the cosine clamped to [-1, 1],
    which removes NaNs at coincidence and antipodes.
    """
    ea, eb = math.radians(a.elevation_deg), math.radians(b.elevation_deg)
    dz = math.radians(a.azimuth_deg - b.azimuth_deg)
    c = math.sin(ea) * math.sin(eb) + math.cos(ea) * math.cos(eb) * math.cos(dz)
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


@dataclass(frozen=True)
class SpeakerChannel:
    name: str
    direction: Direction
    layer: str

    def __post_init__(self) -> None:
        if self.layer not in LAYER_TAGS:
            raise ParameterError(f"unknown layer tag {self.layer!r}")
        el = self.direction.elevation_deg
        ok = (
            (self.layer == "L1" and el == 0.0)
            or (self.layer == "L2" and el == 30.0)
            or (self.layer == "L3" and el >= 60.0)
        )
        if not ok:
            raise ParameterError(
                f"channel {self.name!r}: elevation {el} inconsistent with layer {self.layer}"
            )


@dataclass(frozen=True)
class SpeakerLayout:
    """Ordered loudspeaker channels with elevation-layer tags."""

    channels: tuple[SpeakerChannel, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "channels", tuple(self.channels))
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise ParameterError("channel names must be unique")

    def __len__(self) -> int:
        return len(self.channels)

    @property
    def directions(self) -> tuple[Direction, ...]:
        return tuple(c.direction for c in self.channels)

    def layer(self, tag: str) -> tuple[SpeakerChannel, ...]:
        if tag not in LAYER_TAGS:
            raise ParameterError(f"unknown layer tag {tag!r}")
        return tuple(c for c in self.channels if c.layer == tag)


@dataclass(frozen=True)
class SubsetMember:
    """One render target of a subset: an optional channel name plus direction."""

    direction: Direction
    name: str | None = None


@dataclass(frozen=True)
class DirectionSubset:
    """A named, ordered collection of render directions."""

    name: str
    members: tuple[SubsetMember, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ParameterError(f"subset {self.name!r} has no members")

    def __len__(self) -> int:
        return len(self.members)

    @property
    def directions(self) -> tuple[Direction, ...]:
        return tuple(m.direction for m in self.members)


@dataclass(frozen=True, eq=False)
class HrirSet:
    """Measured or modeled head-related impulse response pairs.

    ``left`` and ``right`` have shape ``(n_entries, ir_length)`` and share
    one sample rate.  Directions must be unique after canonical
    normalization.
    """

    directions: tuple[Direction, ...]
    left: NDArray[np.float64]
    right: NDArray[np.float64]
    sample_rate: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "directions", tuple(self.directions))
        left = np.ascontiguousarray(np.asarray(self.left, dtype=np.float64))
        right = np.ascontiguousarray(np.asarray(self.right, dtype=np.float64))
        if len(self.directions) == 0:
            raise ParameterError("HrirSet needs at least one entry")
        if left.ndim != 2 or left.shape != right.shape or left.shape[0] != len(self.directions):
            raise ParameterError("left/right IR arrays must be (n_entries, ir_length)")
        if self.sample_rate <= 0:
            raise ParameterError("sample rate must be positive")
        keys = {(d.azimuth_deg, d.elevation_deg) for d in self.directions}
        if len(keys) != len(self.directions):
            raise ParameterError("duplicate directions after canonical normalization")
        left.setflags(write=False)
        right.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def __len__(self) -> int:
        return len(self.directions)

    @property
    def ir_length(self) -> int:
        return self.left.shape[1]


def nearest_direction(
    target_set: HrirSet | SpeakerLayout | DirectionSubset, target: Direction
) -> int:
    """Index of the entry minimizing the great-circle angle to ``target``.

    Ties break deterministically toward the lowest index.
    """
    dirs = target_set.directions
    if not dirs:
        raise ParameterError("cannot search an empty set")
    angles = [great_circle_deg(d, target) for d in dirs]
    return int(np.argmin(angles))


def builtin_layout_cube25() -> SpeakerLayout:
    """Hemispherical 25-channel layout in three elevation layers.

    12 channels at 30 deg spacing on the horizon (L1), 8 at 45 deg spacing
    and 30 deg elevation (L2), 4 at 90 deg spacing and 60 deg elevation
    plus the zenith (L3).
    """
    channels: list[SpeakerChannel] = []
    for i in range(12):
        channels.append(
            SpeakerChannel(f"L1-{i + 1:02d}", Direction(i * 30.0, 0.0), "L1")
        )
    for i in range(8):
        channels.append(
            SpeakerChannel(f"L2-{i + 1:02d}", Direction(22.5 + i * 45.0, 30.0), "L2")
        )
    for i in range(4):
        channels.append(
            SpeakerChannel(f"L3-{i + 1:02d}", Direction(45.0 + i * 90.0, 60.0), "L3")
        )
    channels.append(SpeakerChannel("L3-05", Direction(0.0, 90.0), "L3"))
    return SpeakerLayout(tuple(channels))


def builtin_subset(name: str, layout: SpeakerLayout | None = None) -> DirectionSubset:
    """Build one of the named direction subsets.

    SP/QP/ZEN/RING360 are pure direction lists; L1/L2/L3 combinations are
    resolved against ``layout`` (the built-in 25-channel hemisphere by
    default).  Requesting the same subset twice yields identical ordered
    member lists.
    """
    if name in ("SP", "QP", "ZEN", "RING360"):
        if name == "SP":
            azimuths = [45.0, -45.0]
            members = [SubsetMember(Direction(a, 0.0)) for a in azimuths]
        elif name == "QP":
            azimuths = [45.0, -45.0, 135.0, -135.0]
            members = [SubsetMember(Direction(a, 0.0)) for a in azimuths]
        elif name == "ZEN":
            members = [SubsetMember(Direction(0.0, 90.0))]
        else:  # RING360
            members = [SubsetMember(Direction(float(a), 0.0)) for a in range(360)]
        return DirectionSubset(name, tuple(members))
    if name in LAYER_SUBSETS:
        layout = layout if layout is not None else builtin_layout_cube25()
        tags = [name[i : i + 2] for i in range(0, len(name), 2)]
        members = [
            SubsetMember(c.direction, c.name)
            for tag in tags
            for c in layout.layer(tag)
        ]
        return DirectionSubset(name, tuple(members))
    raise ParameterError(f"unknown subset {name!r}")


def load_hrir_manifest(path: str | Path) -> HrirSet:
    """Load an HRIR set from a JSON manifest.

    The manifest format is ``{"sample_rate": int, "entries": [{"az": float,
    "el": float, "file": "relative.wav"}, ...]}`` where every file is a
    2-channel WAV at the manifest sample rate.  A separate converter is
    expected to produce this layout from measured datasets.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise DataError(f"manifest {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest {path} is not valid JSON: {exc}") from exc
    try:
        rate = int(doc["sample_rate"])
        entries = doc["entries"]
    except (KeyError, TypeError) as exc:
        raise DataError(f"manifest {path} missing 'sample_rate' or 'entries'") from exc
    if not entries:
        raise DataError(f"manifest {path} has no entries")

    directions: list[Direction] = []
    lefts: list[np.ndarray] = []
    rights: list[np.ndarray] = []
    ir_length: int | None = None
    for i, entry in enumerate(entries):
        label = f"{path} entry {i} ({entry.get('file', '?')})"
        try:
            direction = Direction(float(entry["az"]), float(entry["el"]))
            wav_path = path.parent / entry["file"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{label}: malformed entry: {exc}") from exc
        try:
            buf = read_wav(wav_path)
        except FileNotFoundError as exc:
            raise DataError(f"{label}: WAV file missing") from exc
        if buf.channels != 2:
            raise DataError(f"{label}: expected 2 channels, got {buf.channels}")
        if buf.sample_rate != rate:
            raise DataError(
                f"{label}: sample rate {buf.sample_rate} != manifest rate {rate}"
            )
        if ir_length is None:
            ir_length = buf.num_samples
        elif buf.num_samples != ir_length:
            raise DataError(
                f"{label}: IR length {buf.num_samples} != first entry length {ir_length}"
            )
        directions.append(direction)
        lefts.append(buf.samples[0])
        rights.append(buf.samples[1])

    keys = {(d.azimuth_deg, d.elevation_deg) for d in directions}
    if len(keys) != len(directions):
        raise DataError(f"manifest {path}: duplicate directions after normalization")
    return HrirSet(tuple(directions), np.vstack(lefts), np.vstack(rights), rate)
