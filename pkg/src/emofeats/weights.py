"""Binary weight container and deterministic synthetic weights.

File layout (all integers little-endian):

    bytes 0..3    magic "GCUW"
    u32           format version (1)
    u32 x 5       n_mfcc, channels, n_blocks, layers_per_block, kernel_size
    payload       f32 tensors, C order, in fixed sequence:
                  input_proj W, input_proj b, then per layer in network
                  order: filter W, filter b, gate W, gate b, residual W,
                  residual b
    u64           FNV-1a checksum of the payload bytes

The header does not carry the dilation schedule; readers reconstruct the
standard doubling cycle (1, 2, 4, ...) from layers_per_block.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import (
    BadMagic,
    ChecksumMismatch,
    IoFailure,
    TruncatedFile,
    VersionUnsupported,
)
from .net import LayerWeights, ModelConfig, WeightSet, expected_shapes, validate_weights

WEIGHT_MAGIC = b"GCUW"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4s6I")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# splitmix64 constants (Steele, Lea, Flood 2014)
_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_MIX2 = np.uint64(0x94D049BB133111EB)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def _tensor_order(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    shapes = expected_shapes(cfg)
    return list(shapes.items())  # insertion order == file order


def payload_nbytes(cfg: ModelConfig) -> int:
    """Exact payload size implied by a configuration."""
    return 4 * sum(int(np.prod(shape)) for _, shape in _tensor_order(cfg))


def write_weights(w: WeightSet, cfg: ModelConfig, path: str | os.PathLike) -> int:
    """Serialize a weight set; returns the payload checksum."""
    validate_weights(cfg, w)
    parts = [arr.astype("<f4", copy=False).tobytes(order="C") for _, arr in w.tensors()]
    payload = b"".join(parts)
    checksum = fnv1a64(payload)
    header = _HEADER.pack(
        WEIGHT_MAGIC,
        FORMAT_VERSION,
        cfg.n_mfcc,
        cfg.channels,
        cfg.n_blocks,
        cfg.layers_per_block,
        cfg.kernel_size,
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
            fh.write(struct.pack("<Q", checksum))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return checksum


def read_weights(path: str | os.PathLike) -> tuple[ModelConfig, WeightSet]:
    """Parse and checksum-validate a weight file."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc

    if len(data) < _HEADER.size:
        raise TruncatedFile(f"{path}: {len(data)} bytes, header needs {_HEADER.size}")
    magic, version, n_mfcc, channels, n_blocks, layers_per_block, kernel_size = _HEADER.unpack_from(
        data
    )
    if magic != WEIGHT_MAGIC:
        raise BadMagic(f"{path}: magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"{path}: version {version}, supported {FORMAT_VERSION}")

    cfg = ModelConfig(
        n_mfcc=n_mfcc,
        channels=channels,
        n_blocks=n_blocks,
        layers_per_block=layers_per_block,
        kernel_size=kernel_size,
    )
    expected = _HEADER.size + payload_nbytes(cfg) + 8
    if len(data) != expected:
        raise TruncatedFile(f"{path}: {len(data)} bytes, format implies {expected}")

    payload = data[_HEADER.size : -8]
    (stored,) = struct.unpack_from("<Q", data, len(data) - 8)
    actual = fnv1a64(payload)
    if actual != stored:
        raise ChecksumMismatch(f"{path}: stored {stored:#018x}, computed {actual:#018x}")

    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in _tensor_order(cfg):
        count = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[name] = arr.reshape(shape).copy()
        offset += 4 * count

    layers = [
        LayerWeights(
            filter_w=tensors[f"layer{i}.filter.weight"],
            filter_b=tensors[f"layer{i}.filter.bias"],
            gate_w=tensors[f"layer{i}.gate.weight"],
            gate_b=tensors[f"layer{i}.gate.bias"],
            res_w=tensors[f"layer{i}.residual.weight"],
            res_b=tensors[f"layer{i}.residual.bias"],
        )
        for i in range(cfg.total_layers)
    ]
    return cfg, WeightSet(
        input_w=tensors["input_proj.weight"], input_b=tensors["input_proj.bias"], layers=layers
    )


class _SplitMix64:
    """Counter-based splitmix64 stream; draw(n) advances the stream by n."""

    def __init__(self, seed: int):
        self.seed = np.uint64(seed & _MASK64)
        self.counter = 0

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1), from the top 53 bits of each word."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = self.seed + _SM64_GAMMA * idx
        z = (z ^ (z >> np.uint64(30))) * _SM64_MIX1
        z = (z ^ (z >> np.uint64(27))) * _SM64_MIX2
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _fan_in(cfg: ModelConfig, slot: str) -> int:
    if slot.startswith("input_proj"):
        return cfg.n_mfcc
    if ".residual." in slot:
        return cfg.channels
    return cfg.channels * cfg.kernel_size  # filter and gate convs


def synth_weights(cfg: ModelConfig, seed: int) -> WeightSet:
    """Deterministic random weights, uniform in [-s, s] with s = 1/sqrt(fan_in).

    One splitmix64 stream per (cfg, seed), consumed in file order; identical
    inputs give identical tensors on every platform. Biases use the fan-in of
    their convolution.
    """
    stream = _SplitMix64(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in _tensor_order(cfg):
        s = 1.0 / np.sqrt(_fan_in(cfg, name))
        values = (2.0 * stream.uniform(int(np.prod(shape))) - 1.0) * s
        arr = values.astype(np.float32).reshape(shape)
        # float32 rounding may land one ulp outside [-s, s]; clamp back in
        bound = np.float32(s)
        if float(bound) > s:
            bound = np.nextafter(bound, np.float32(0))
        np.clip(arr, -bound, bound, out=arr)
        tensors[name] = arr

    layers = [
        LayerWeights(
            filter_w=tensors[f"layer{i}.filter.weight"],
            filter_b=tensors[f"layer{i}.filter.bias"],
            gate_w=tensors[f"layer{i}.gate.weight"],
            gate_b=tensors[f"layer{i}.gate.bias"],
            res_w=tensors[f"layer{i}.residual.weight"],
            res_b=tensors[f"layer{i}.residual.bias"],
        )
        for i in range(cfg.total_layers)
    ]
    return WeightSet(
        input_w=tensors["input_proj.weight"], input_b=tensors["input_proj.bias"], layers=layers
    )
