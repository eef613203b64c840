"""Minimal RIFF/WAVE reader and writer.

The writer always emits IEEE float-32 (fmt tag 3), so a write -> read
round trip of float-32 data is bit-exact.  The reader additionally accepts
PCM-16 and PCM-24 (fmt tag 1); integers are mapped to floats as
s / 2^(bits-1).  Errors name the chunk at fault.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .errors import FormatError

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3


def write_wav(buffer: AudioBuffer, path: str | Path) -> None:
    """Write a buffer as interleaved IEEE float-32 WAV."""
    data = np.asarray(buffer.samples, dtype=np.float32).T  # (n, ch) interleaved
    raw = data.tobytes()
    channels = buffer.channels
    rate = buffer.sample_rate
    block_align = channels * 4
    fmt_chunk = struct.pack(
        "<HHIIHH", _WAVE_FORMAT_IEEE_FLOAT, channels, rate, rate * block_align, block_align, 32
    )
    fact_chunk = struct.pack("<I", buffer.num_samples)
    body = b"WAVE"
    body += b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
    body += b"fact" + struct.pack("<I", len(fact_chunk)) + fact_chunk
    body += b"data" + struct.pack("<I", len(raw)) + raw
    if len(raw) % 2:
        body += b"\x00"
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a RIFF/WAVE file (float-32 or PCM-16/24) into an AudioBuffer."""
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise FormatError(f"{path}: file too short for a RIFF header")
    if blob[0:4] != b"RIFF":
        raise FormatError(f"{path}: missing 'RIFF' chunk id")
    if blob[8:12] != b"WAVE":
        raise FormatError(f"{path}: RIFF form type is not 'WAVE'")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        payload = blob[pos + 8 : pos + 8 + size]
        if len(payload) < size:
            raise FormatError(f"{path}: chunk {cid!r} truncated")
        if cid == b"fmt ":
            if size < 16:
                raise FormatError(f"{path}: 'fmt ' chunk too small ({size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", payload)
        elif cid == b"data":
            data = payload
        pos += 8 + size + (size % 2)  # chunks are word-aligned

    if fmt is None:
        raise FormatError(f"{path}: no 'fmt ' chunk found")
    if data is None:
        raise FormatError(f"{path}: no 'data' chunk found")

    tag, channels, rate, _byte_rate, _block_align, bits = fmt
    if channels < 1:
        raise FormatError(f"{path}: 'fmt ' chunk declares {channels} channels")
    if tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        bytes_per_sample = 4
    elif tag == _WAVE_FORMAT_PCM and bits in (16, 24):
        bytes_per_sample = bits // 8
    elif tag in (_WAVE_FORMAT_IEEE_FLOAT, _WAVE_FORMAT_PCM):
        raise FormatError(f"{path}: 'fmt ' with codec tag {tag} at {bits} bits is unsupported")
    else:
        raise FormatError(f"{path}: 'fmt ' codec tag {tag} is unsupported")
    if len(data) % (bytes_per_sample * channels):
        raise FormatError(f"{path}: 'data' chunk size is not a whole number of frames")

    if tag == _WAVE_FORMAT_IEEE_FLOAT:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    elif bits == 16:
        samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    else:  # PCM-24
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3)
        ints = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        ints = (ints << 8) >> 8  # sign-extend 24 -> 32 bit
        samples = ints.astype(np.float64) / 8388608.0

    planar = samples.reshape(-1, channels).T
    return AudioBuffer(planar, rate)
