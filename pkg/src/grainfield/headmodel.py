"""Spherical-head HRIR model for self-contained binaural rendering.

Produces physically plausible head-related impulse responses for arbitrary
directions: Woodworth-style propagation delays around a rigid sphere, a
one-pole/one-zero head-shadow magnitude, and an elevation-dependent
spectral peak near 8 kHz that mimics pinna directional bands.  The model
exists so that the renderer, the diffuse-field reference and the cue
analyzer can run without a measured dataset; measured sets load through
:func:`grainfield.spatial.load_hrir_manifest` and are drop-in replacements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .audio import AudioBuffer
from .errors import ParameterError
from .spatial import Direction, HrirSet
from .wavio import write_wav

SPEED_OF_SOUND = 343.0  # m/s


@dataclass(frozen=True)
class HeadModel:
    """Parameters of the spherical-head renderer."""

    head_radius_m: float = 0.085
    #: High-frequency gain at the deepest shadow angle (linear).
    shadow_min: float = 0.15
    #: Angle of deepest shadow on the far side, degrees from the ear axis.
    shadow_min_angle_deg: float = 150.0
    #: Peak pinna boost at the zenith, dB, centered on ``pinna_center_hz``.
    pinna_gain_db: float = 10.0
    pinna_center_hz: float = 8000.0
    #: Width (std dev) of the pinna peak in octaves.
    pinna_width_oct: float = 0.4
    base_delay_s: float = 0.0015

    def ear_delay_s(self, incidence_rad: np.ndarray) -> np.ndarray:
        """Propagation delay re head center for an ear at angle theta."""
        a_c = self.head_radius_m / SPEED_OF_SOUND
        near = -a_c * np.cos(incidence_rad)
        far = a_c * (incidence_rad - np.pi / 2.0)
        return np.where(incidence_rad <= np.pi / 2.0, near, far)

    def shadow_alpha(self, incidence_rad: np.ndarray) -> np.ndarray:
        """High-frequency shadow gain: 2.0 toward the ear, minimum on the far side."""
        theta_min = math.radians(self.shadow_min_angle_deg)
        return (1.0 + self.shadow_min / 2.0) + (1.0 - self.shadow_min / 2.0) * np.cos(
            incidence_rad * np.pi / theta_min
        )

    def shadow_magnitude(self, freqs_hz: np.ndarray, incidence_rad: np.ndarray) -> np.ndarray:
        """|H| of the one-pole/one-zero sphere-shadow filter.

        Rows follow ``incidence_rad``, columns follow ``freqs_hz``.
        """
        f_beta = SPEED_OF_SOUND / (np.pi * self.head_radius_m)
        alpha = self.shadow_alpha(np.atleast_1d(incidence_rad))[:, None]
        ratio = (np.atleast_1d(freqs_hz)[None, :] / f_beta) ** 2
        return np.sqrt((1.0 + alpha**2 * ratio) / (1.0 + ratio))

    def pinna_magnitude(self, freqs_hz: np.ndarray, elevation_deg: float) -> np.ndarray:
        """Elevation-dependent spectral peak (identical for both ears)."""
        amount = self.pinna_gain_db * max(0.0, math.sin(math.radians(elevation_deg)))
        if amount == 0.0:
            return np.ones_like(freqs_hz)
        with np.errstate(divide="ignore"):
            octaves = np.log2(np.maximum(freqs_hz, 1e-9) / self.pinna_center_hz)
        bump_db = amount * np.exp(-0.5 * (octaves / self.pinna_width_oct) ** 2)
        bump_db[freqs_hz <= 0.0] = 0.0
        return 10.0 ** (bump_db / 20.0)


def synthetic_hrir_set(
    directions: Iterable[Direction],
    sample_rate: int = 48000,
    ir_length: int = 512,
    model: HeadModel | None = None,
) -> HrirSet:
    """Render model HRIR pairs for the given directions.

    Magnitudes are built on the rfft grid, combined with a linear-phase
    delay, inverse transformed, and faded at the buffer edges to suppress
    circular wrap-around.  The construction is pure, so identical inputs
    give bit-identical sets.
    """
    model = model or HeadModel()
    dirs = tuple(directions)
    if not dirs:
        raise ParameterError("need at least one direction")
    if ir_length < 64:
        raise ParameterError("ir_length must be at least 64 samples")

    freqs = np.fft.rfftfreq(ir_length, d=1.0 / sample_rate)
    vecs = np.array([d.unit_vector() for d in dirs])  # (n, 3)
    # Incidence angle between each direction and the ear axes (+y left, -y right).
    cos_left = np.clip(vecs[:, 1], -1.0, 1.0)
    theta_left = np.arccos(cos_left)
    theta_right = np.arccos(-cos_left)

    fade = np.ones(ir_length)
    edge = np.hanning(65)[:32]
    fade[:32] = edge
    fade[-32:] = edge[::-1]

    out = {}
    for ear, theta in (("left", theta_left), ("right", theta_right)):
        mags = model.shadow_magnitude(freqs, theta)
        delays = model.base_delay_s + model.ear_delay_s(theta)
        phase = np.exp(-2j * np.pi * freqs[None, :] * delays[:, None])
        spectra = mags * phase
        for i, d in enumerate(dirs):
            spectra[i] *= model.pinna_magnitude(freqs, d.elevation_deg)
        irs = np.fft.irfft(spectra, n=ir_length, axis=1) * fade[None, :]
        out[ear] = irs
    return HrirSet(dirs, out["left"], out["right"], sample_rate)


def write_hrir_manifest(hrirs: HrirSet, out_dir: str | Path, stem: str = "hrir") -> Path:
    """Write an HrirSet as WAV files plus a JSON manifest; returns the manifest path.

    The emitted layout is exactly what :func:`load_hrir_manifest` consumes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, d in enumerate(hrirs.directions):
        name = f"{stem}_{i:04d}.wav"
        pair = AudioBuffer(np.vstack([hrirs.left[i], hrirs.right[i]]), hrirs.sample_rate)
        write_wav(pair, out_dir / name)
        entries.append({"az": d.azimuth_deg, "el": d.elevation_deg, "file": name})
    manifest = {"sample_rate": hrirs.sample_rate, "entries": entries}
    manifest_path = out_dir / f"{stem}_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return manifest_path
