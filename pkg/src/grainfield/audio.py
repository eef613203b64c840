"""Sample-accurate signal containers, test-signal generators and filters.

All buffers are immutable float64 arrays in planar layout (channels x
samples).  Generation and filtering are pure functions of their inputs, so
repeated calls with the same arguments agree bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.fft import next_fast_len

from .errors import ParameterError

DEFAULT_SAMPLE_RATE = 48000

#: Default RMS level for generated/normalized stimuli: -20 dBFS.
DEFAULT_RMS_DBFS = -20.0


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Uniformly sampled audio, full-scale +-1.0, planar channel layout.

    Parameters
    ----------
    samples : ndarray
        Shape ``(n,)`` for mono or ``(channels, n)``.  Stored as a
        read-only float64 array of shape ``(channels, n)``.
    sample_rate : int
        Sampling rate in Hz, must be positive.
    """

    samples: NDArray[np.float64]
    sample_rate: int

    def __post_init__(self) -> None:
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise ParameterError(f"samples must be 1-D or 2-D, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate

    @property
    def mono(self) -> NDArray[np.float64]:
        """The single channel of a mono buffer as a 1-D array."""
        if self.channels != 1:
            raise ParameterError(f"buffer has {self.channels} channels, expected mono")
        return self.samples[0]

    def rms(self) -> float:
        """RMS over all channels and samples."""
        return float(np.sqrt(np.mean(np.square(self.samples))))

    def rms_dbfs(self) -> float:
        r = self.rms()
        return -np.inf if r == 0.0 else float(20.0 * np.log10(r))

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(self.samples * gain, self.sample_rate)

    def normalized(self, target_dbfs: float = DEFAULT_RMS_DBFS) -> "AudioBuffer":
        """Scale so the overall RMS sits at ``target_dbfs``."""
        r = self.rms()
        if r == 0.0:
            raise ParameterError("cannot normalize an all-zero buffer")
        return self.scaled(10.0 ** (target_dbfs / 20.0) / r)

    def trimmed(self, start: int, stop: int) -> "AudioBuffer":
        """Sample range [start, stop) of every channel."""
        if not (0 <= start < stop <= self.num_samples):
            raise ParameterError(f"invalid trim range [{start}, {stop})")
        return AudioBuffer(self.samples[:, start:stop], self.sample_rate)


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth lowpass description (magnitude prototype).

    ``order`` must be even and positive; ``cutoff_hz`` must lie strictly
    between 0 and the Nyquist frequency of the buffer it is applied to.
    """

    cutoff_hz: float
    order: int = 12
    kind: str = field(default="butterworth-lowpass")

    def __post_init__(self) -> None:
        if self.kind != "butterworth-lowpass":
            raise ParameterError(f"unknown filter kind {self.kind!r}")
        if self.order <= 0 or self.order % 2 != 0:
            raise ParameterError(f"filter order must be a positive even integer, got {self.order}")
        if self.cutoff_hz <= 0:
            raise ParameterError(f"cutoff must be positive, got {self.cutoff_hz}")

    def magnitude(self, freqs_hz: NDArray[np.float64]) -> NDArray[np.float64]:
        """Analytic magnitude |H(f)| = 1/sqrt(1 + (f/fc)^(2*order))."""
        ratio = np.asarray(freqs_hz, dtype=np.float64) / self.cutoff_hz
        with np.errstate(over="ignore"):
            return 1.0 / np.sqrt(1.0 + ratio ** (2 * self.order))


#: Corner below which the pink spectrum rolls off (second order).  True
#: 1/f noise keeps ~20% of its power below 1 Hz; that infrasonic energy has
#: second-long autocorrelation, which both breaks the uncorrelated-grain
#: premise of overlap compensation and is absent from audio-band pink
#: noise in practice.
PINK_LOW_CORNER_HZ = 10.0


def _pink_spectrum_shape(n: int, sample_rate: int) -> NDArray[np.float64]:
    """Per-bin amplitude shaping for pink noise on an n-point rfft grid.

    1/sqrt(f) above the low corner (exact -3 dB/octave PSD), a second-order
    roll-off below it, zero at DC.
    """
    half = n // 2 + 1
    f = np.arange(half, dtype=np.float64) * (sample_rate / n)
    with np.errstate(divide="ignore"):
        shape = 1.0 / np.sqrt(f)
    shape[0] = 0.0  # zero DC
    low = (f > 0) & (f < PINK_LOW_CORNER_HZ)
    shape[low] *= (f[low] / PINK_LOW_CORNER_HZ) ** 1.5
    return shape


def _pink_from_rng(n: int, sample_rate: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Pink noise of n samples via frequency-domain 1/sqrt(f) shaping."""
    half = n // 2 + 1
    spec = (rng.standard_normal(half) + 1j * rng.standard_normal(half))
    spec *= _pink_spectrum_shape(n, sample_rate)
    if n % 2 == 0:
        spec[-1] = spec[-1].real  # Nyquist bin must be real
    return np.fft.irfft(spec, n=n)


def generate_pink_noise(
    duration_s: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
) -> AudioBuffer:
    """Deterministic mono pink noise, RMS-normalized to -20 dBFS.

    The spectrum is shaped to exactly -3 dB/octave by construction:
    every non-DC bin of a complex Gaussian spectrum is scaled by
    1/sqrt(f), then inverse transformed.
    """
    if duration_s <= 0:
        raise ParameterError(f"duration must be positive, got {duration_s}")
    if sample_rate <= 0:
        raise ParameterError(f"sample rate must be positive, got {sample_rate}")
    n = int(round(duration_s * sample_rate))
    if n < 2:
        raise ParameterError("duration too short for the given sample rate")
    x = _pink_from_rng(n, sample_rate, np.random.default_rng(seed))
    x *= 10.0 ** (DEFAULT_RMS_DBFS / 20.0) / np.sqrt(np.mean(np.square(x)))
    return AudioBuffer(x, sample_rate)


def apply_lowpass(buffer: AudioBuffer, spec: FilterSpec) -> AudioBuffer:
    """Zero-phase lowpass with the exact Butterworth magnitude response.

    The filter is applied in the frequency domain: the padded spectrum of
    each channel is multiplied by the analytic magnitude of ``spec``.
    This realizes |H(f)| exactly (a bilinear-transform IIR would deviate
    from the analytic curve by >1 dB near and above 2*fc at audio rates),
    is linear, and maps silence to silence.  Output length equals input
    length; the symmetric smear of the acausal kernel is absorbed by
    internal padding.
    """
    nyquist = buffer.sample_rate / 2.0
    if spec.cutoff_hz >= nyquist:
        raise ParameterError(
            f"cutoff {spec.cutoff_hz} Hz must be below Nyquist ({nyquist} Hz)"
        )
    n = buffer.num_samples
    # Pad generously past the kernel decay (sharpest pole pair of an
    # order-N Butterworth decays with time constant 1/(2*pi*fc*sin(pi/2N))).
    tau = 1.0 / (2.0 * np.pi * spec.cutoff_hz * np.sin(np.pi / (2 * spec.order)))
    tail = int(np.ceil(40.0 * tau * buffer.sample_rate)) + 64
    nfft = next_fast_len(n + 2 * tail)
    freqs = np.fft.rfftfreq(nfft, d=1.0 / buffer.sample_rate)
    mag = spec.magnitude(freqs)
    out = np.empty_like(buffer.samples)
    for ch in range(buffer.channels):
        spectrum = np.fft.rfft(buffer.samples[ch], nfft)
        out[ch] = np.fft.irfft(spectrum * mag, nfft)[:n]
    return AudioBuffer(out, buffer.sample_rate)
