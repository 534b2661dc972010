"""MFCC frontend: waveform to a 20-coefficient cepstral sequence.

Pipeline per frame: Hann window -> power spectrum -> triangular mel
filterbank (peak height 1, no area normalization) -> natural log with an
absolute floor -> orthonormal DCT-II, keeping the first n_mfcc rows.

Frames are center-aligned: the signal is reflection-padded by frame_len/2 on
both ends and frame t starts at t*hop_len in the padded signal, so frame t is
centered on sample t*hop_len. T = 1 + (len-1)//hop_len.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer
from .errors import AudioTooShort, DegenerateFilter, IoFailure, ShapeMismatch

MFCC_MAGIC = b"MFC1"


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class MfccConfig:
    sample_rate_hz: int = 16000
    frame_len: int = 512  # 32 ms at 16 kHz; also the FFT size
    hop_len: int = 160  # 10 ms
    n_mels: int = 40
    n_mfcc: int = 20
    fmin_hz: float = 0.0
    fmax_hz: float | None = None  # None -> sample_rate / 2
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.fmax_hz is None:
            object.__setattr__(self, "fmax_hz", self.sample_rate_hz / 2.0)
        if not (0 < self.hop_len <= self.frame_len):
            raise ValueError("need 0 < hop_len <= frame_len")
        if not _is_pow2(self.frame_len):
            raise ValueError("frame_len must be a power of two")
        if not (0 < self.n_mfcc <= self.n_mels):
            raise ValueError("need 0 < n_mfcc <= n_mels")
        if not (0 <= self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2.0):
            raise ValueError("need 0 <= fmin < fmax <= sample_rate/2")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def fft_size(self) -> int:
        return self.frame_len


@dataclass(frozen=True)
class MfccSequence:
    coeffs: np.ndarray  # (n_mfcc, T), coefficient-major
    frame_times_s: np.ndarray  # (T,)
    utterance_id: str

    def __post_init__(self):
        if self.coeffs.ndim != 2 or self.coeffs.shape[1] < 1:
            raise ShapeMismatch(f"coeffs shape {self.coeffs.shape}, need (n_mfcc, T>=1)")
        if not np.isfinite(self.coeffs).all():
            raise ShapeMismatch("coeffs contain NaN/Inf")

    @property
    def frame_count(self) -> int:
        return self.coeffs.shape[1]


def frame_signal(samples: np.ndarray, frame_len: int, hop_len: int) -> np.ndarray:
    """Slice a signal into T x frame_len centered frames with reflection padding."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 1:
        raise AudioTooShort("cannot frame an empty signal")
    n_frames = 1 + (x.size - 1) // hop_len
    pad = frame_len // 2
    padded = np.pad(x, pad, mode="reflect" if x.size > 1 else "edge")
    frames = np.empty((n_frames, frame_len), dtype=np.float64)
    for t in range(n_frames):
        frames[t] = padded[t * hop_len : t * hop_len + frame_len]
    return frames


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window w[i] = 0.5 - 0.5*cos(2*pi*i/n)."""
    i = np.arange(n, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * i / n)


def power_spectrum(frame: np.ndarray, window: np.ndarray) -> np.ndarray:
    """|DFT(window * frame)|^2 for bins 0..n/2."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != window.shape:
        raise ShapeMismatch(f"frame {frame.shape} vs window {window.shape}")
    spec = np.fft.rfft(window * frame)
    return (spec.real**2 + spec.imag**2).astype(np.float64)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MfccConfig) -> np.ndarray:
    """Triangular mel filters evaluated at the FFT bin centers.

    Returns an (n_mels, fft_size/2+1) matrix. Filters have unit peak height;
    filter m spans mel points m..m+2 of a uniform grid over [fmin, fmax].
    """
    n_bins = cfg.fft_size // 2 + 1
    bin_hz = np.arange(n_bins, dtype=np.float64) * cfg.sample_rate_hz / cfg.fft_size
    mel_pts = np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)

    fb = np.zeros((cfg.n_mels, n_bins), dtype=np.float64)
    for m in range(cfg.n_mels):
        left, center, right = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (bin_hz - left) / (center - left)
        down = (right - bin_hz) / (right - center)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
        if not fb[m].any():
            raise DegenerateFilter(
                f"mel filter {m} covers no FFT bin ([{left:.1f}, {right:.1f}] Hz); "
                "widen fmin/fmax or reduce n_mels"
            )
    return fb


def dct_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Orthonormal DCT-II basis rows 0..n_out-1 for length-n_in input."""
    k = np.arange(n_out, dtype=np.float64)[:, None]
    n = np.arange(n_in, dtype=np.float64)[None, :]
    mat = np.cos(np.pi * (2.0 * n + 1.0) * k / (2.0 * n_in))
    mat *= np.sqrt(2.0 / n_in)
    mat[0] *= np.sqrt(0.5)
    return mat


def dct_ii_ortho(v: np.ndarray, n_out: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if n_out > v.shape[-1]:
        raise ShapeMismatch(f"n_out {n_out} exceeds input length {v.shape[-1]}")
    return dct_matrix(v.shape[-1], n_out) @ v


def compute_mfcc(buf: AudioBuffer, cfg: MfccConfig, utterance_id: str | None = None) -> MfccSequence:
    """Run the full frontend on an audio buffer."""
    frames = frame_signal(buf.samples, cfg.frame_len, cfg.hop_len)
    if frames.shape[0] < 1:
        raise AudioTooShort(buf.source_path)
    window = hann_window(cfg.frame_len)
    spec = np.fft.rfft(frames * window[None, :], axis=1)
    power = spec.real**2 + spec.imag**2

    fb = mel_filterbank(cfg)
    mel_energy = power @ fb.T  # (T, n_mels)
    log_mel = np.log(np.maximum(mel_energy, cfg.log_floor))
    coeffs = (dct_matrix(cfg.n_mels, cfg.n_mfcc) @ log_mel.T).astype(np.float64)

    times = np.arange(frames.shape[0], dtype=np.float64) * cfg.hop_len / cfg.sample_rate_hz
    return MfccSequence(
        coeffs=coeffs,
        frame_times_s=times,
        utterance_id=utterance_id if utterance_id is not None else buf.source_path,
    )


def write_mfcc(seq: MfccSequence, path: str | os.PathLike) -> None:
    """Binary dump: magic 'MFC1', u32 n_mfcc, u32 T (little-endian), row-major f32."""
    try:
        with open(path, "wb") as fh:
            fh.write(MFCC_MAGIC)
            fh.write(struct.pack("<II", seq.coeffs.shape[0], seq.coeffs.shape[1]))
            fh.write(seq.coeffs.astype("<f4").tobytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_mfcc(path: str | os.PathLike, utterance_id: str = "") -> MfccSequence:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if data[:4] != MFCC_MAGIC:
        raise IoFailure(f"{path}: bad magic")
    n_mfcc, n_frames = struct.unpack_from("<II", data, 4)
    coeffs = np.frombuffer(data, dtype="<f4", count=n_mfcc * n_frames, offset=12)
    coeffs = coeffs.reshape(n_mfcc, n_frames).astype(np.float64)
    times = np.zeros(n_frames)  # frame times are not stored in the dump
    return MfccSequence(coeffs=coeffs, frame_times_s=times, utterance_id=utterance_id or os.fspath(path))
