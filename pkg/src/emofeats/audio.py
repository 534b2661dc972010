"""Mono PCM WAV loading for the feature pipeline.

The parser is deliberately strict: RIFF/WAVE, one channel, 16-bit integer or
32-bit float PCM, little-endian. Anything else is rejected rather than
silently converted; resampling and channel mixing happen upstream of this
toolkit.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmptyAudio, MissingFile, SampleRateMismatch, UnsupportedEncoding

# int16 full-scale divisor; maps -32768 to exactly -1.0
INT16_SCALE = 32768.0

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3
_FMT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio with samples in [-1, 1]."""

    samples: np.ndarray  # float64, shape (n,)
    sample_rate_hz: int
    source_path: str

    def __post_init__(self):
        if self.samples.size == 0:
            raise EmptyAudio(f"{self.source_path}: zero samples")
        if self.sample_rate_hz <= 0:
            raise UnsupportedEncoding(f"{self.source_path}: nonpositive sample rate")
        peak = float(np.max(np.abs(self.samples)))
        if peak > 1.0:
            raise UnsupportedEncoding(
                f"{self.source_path}: samples exceed full scale (peak {peak:.6g})"
            )

    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def load_wav(path: str | os.PathLike) -> AudioBuffer:
    """Load a mono PCM WAV file, normalizing int16 samples by 32768."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFile(path)
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedEncoding(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise UnsupportedEncoding(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise UnsupportedEncoding(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format == _FMT_EXTENSIBLE:
        raise UnsupportedEncoding(f"{path}: WAVE_FORMAT_EXTENSIBLE not supported")
    if channels != 1:
        raise UnsupportedEncoding(f"{path}: {channels} channels, expected mono")

    if audio_format == _FMT_PCM and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / INT16_SCALE
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedEncoding(
            f"{path}: format tag {audio_format} with {bits} bits not supported"
        )

    if samples.size == 0:
        raise EmptyAudio(f"{path}: zero samples")
    return AudioBuffer(samples=samples, sample_rate_hz=sample_rate, source_path=path)


def write_wav(path: str | os.PathLike, samples: np.ndarray, sample_rate_hz: int) -> None:
    """Write float samples in [-1, 1] as a mono 16-bit PCM WAV file."""
    path = os.fspath(path)
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ints = np.round(clipped * INT16_SCALE)
    np.clip(ints, -32768, 32767, out=ints)
    payload = ints.astype("<i2").tobytes()

    byte_rate = sample_rate_hz * 2
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, _FMT_PCM, 1, sample_rate_hz, byte_rate, 2, 16)
    header += b"data" + struct.pack("<I", len(payload))
    with open(path, "wb") as fh:
        fh.write(header + payload)


def validate_rate(buf: AudioBuffer, expected_hz: int) -> None:
    """Raise SampleRateMismatch unless the buffer matches the pipeline rate."""
    if buf.sample_rate_hz != expected_hz:
        raise SampleRateMismatch(buf.sample_rate_hz, expected_hz)
