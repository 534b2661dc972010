"""Inference-only forward pass of the dilated gated-convolution stack.

Each layer computes z = tanh(conv_f(x)) * sigmoid(conv_g(x)) and passes
x + conv1x1(z) to the next layer; the gated product z of every layer is the
recorded activation. Convolutions are non-causal with symmetric zero padding
of d*(k-1)/2, so frame count is preserved through the whole stack.

Accumulation order inside a convolution is fixed (input channel outer, kernel
tap inner) to keep outputs reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigWeightMismatch, NonFiniteActivation, ShapeMismatch
from .mfcc import MfccSequence

# largest double below 1; gated products are clamped into the open interval
# (-1, 1) that tanh*sigmoid spans mathematically but can escape by one ulp
# when both factors round to 1.0
_OPEN_ONE = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class ModelConfig:
    n_mfcc: int = 20
    channels: int = 128
    n_blocks: int = 3
    layers_per_block: int = 5
    dilations_per_block: tuple[int, ...] | None = None  # None -> 1, 2, 4, ...
    kernel_size: int = 7

    def __post_init__(self):
        if self.dilations_per_block is None:
            object.__setattr__(
                self, "dilations_per_block", tuple(2**i for i in range(self.layers_per_block))
            )
        if min(self.n_mfcc, self.channels, self.n_blocks, self.layers_per_block) < 1:
            raise ValueError("all dimensions must be positive")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and >= 1")
        if len(self.dilations_per_block) != self.layers_per_block:
            raise ValueError("need one dilation per layer in a block")
        if any(d < 1 for d in self.dilations_per_block):
            raise ValueError("dilations must be >= 1")

    @property
    def total_layers(self) -> int:
        return self.n_blocks * self.layers_per_block

    @property
    def total_units(self) -> int:
        return self.channels * self.total_layers

    def layer_dilations(self) -> list[int]:
        """Dilation of each layer in network order (block cycle repeated)."""
        return list(self.dilations_per_block) * self.n_blocks


@dataclass
class LayerWeights:
    filter_w: np.ndarray  # (channels, channels, kernel_size)
    filter_b: np.ndarray  # (channels,)
    gate_w: np.ndarray
    gate_b: np.ndarray
    res_w: np.ndarray  # (channels, channels), 1x1 projection
    res_b: np.ndarray


@dataclass
class WeightSet:
    input_w: np.ndarray  # (channels, n_mfcc)
    input_b: np.ndarray  # (channels,)
    layers: list[LayerWeights] = field(default_factory=list)

    def tensors(self):
        """All tensors in file order, as (slot_name, array) pairs."""
        yield "input_proj.weight", self.input_w
        yield "input_proj.bias", self.input_b
        for i, lw in enumerate(self.layers):
            yield f"layer{i}.filter.weight", lw.filter_w
            yield f"layer{i}.filter.bias", lw.filter_b
            yield f"layer{i}.gate.weight", lw.gate_w
            yield f"layer{i}.gate.bias", lw.gate_b
            yield f"layer{i}.residual.weight", lw.res_w
            yield f"layer{i}.residual.bias", lw.res_b


def expected_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Slot name -> tensor shape for a configuration."""
    c, k = cfg.channels, cfg.kernel_size
    shapes: dict[str, tuple[int, ...]] = {
        "input_proj.weight": (c, cfg.n_mfcc),
        "input_proj.bias": (c,),
    }
    for i in range(cfg.total_layers):
        shapes[f"layer{i}.filter.weight"] = (c, c, k)
        shapes[f"layer{i}.filter.bias"] = (c,)
        shapes[f"layer{i}.gate.weight"] = (c, c, k)
        shapes[f"layer{i}.gate.bias"] = (c,)
        shapes[f"layer{i}.residual.weight"] = (c, c)
        shapes[f"layer{i}.residual.bias"] = (c,)
    return shapes


def validate_weights(cfg: ModelConfig, w: WeightSet) -> None:
    expected = expected_shapes(cfg)
    actual = dict(w.tensors())
    if set(actual) != set(expected):
        raise ConfigWeightMismatch(
            f"weight set has {len(w.layers)} layers, config expects {cfg.total_layers}"
        )
    for name, arr in actual.items():
        if tuple(arr.shape) != expected[name]:
            raise ConfigWeightMismatch(f"{name}: shape {arr.shape}, expected {expected[name]}")
        if not np.isfinite(arr).all():
            raise ConfigWeightMismatch(f"{name}: non-finite entries")


@dataclass(frozen=True)
class ActivationTensor:
    values: np.ndarray  # (layers, channels, frames)
    utterance_id: str

    @property
    def layer_count(self) -> int:
        return self.values.shape[0]

    @property
    def channel_count(self) -> int:
        return self.values.shape[1]

    @property
    def frame_count(self) -> int:
        return self.values.shape[2]


def dilated_conv(x: np.ndarray, w: np.ndarray, bias: np.ndarray, dilation: int) -> np.ndarray:
    """Same-padded non-causal dilated 1-D convolution.

    x: (c_in, T), w: (c_out, c_in, k) with k odd, bias: (c_out,). Output
    position t sums w[:, ci, tap] * x[ci, t + (tap - (k-1)/2) * dilation],
    with zeros outside the signal.
    """
    if x.ndim != 2 or w.ndim != 3 or bias.ndim != 1:
        raise ShapeMismatch(f"x {x.shape}, w {w.shape}, bias {bias.shape}")
    c_out, c_in, k = w.shape
    if x.shape[0] != c_in or bias.shape[0] != c_out:
        raise ShapeMismatch(f"x {x.shape} / bias {bias.shape} inconsistent with w {w.shape}")
    if dilation < 1:
        raise ShapeMismatch(f"dilation {dilation} < 1")
    if k % 2 == 0:
        raise ShapeMismatch(f"kernel size {k} must be odd for symmetric padding")

    n_frames = x.shape[1]
    pad = dilation * (k - 1) // 2
    padded = np.zeros((c_in, n_frames + 2 * pad), dtype=np.float64)
    padded[:, pad : pad + n_frames] = x

    w64 = w.astype(np.float64, copy=False)
    out = np.empty((c_out, n_frames), dtype=np.float64)
    out[:] = bias.astype(np.float64, copy=False)[:, None]
    buf = np.empty_like(out)
    for ci in range(c_in):
        row = padded[ci]
        for tap in range(k):
            start = tap * dilation
            np.multiply(w64[:, ci, tap, None], row[start : start + n_frames], out=buf)
            out += buf
    return out


def conv1x1(x: np.ndarray, w: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Pointwise channel mix; same accumulation order as dilated_conv."""
    if w.ndim != 2:
        raise ShapeMismatch(f"1x1 weight must be 2-D, got {w.shape}")
    return dilated_conv(x, w[:, :, None], bias, 1)


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def gated_block_forward(
    x: np.ndarray, lw: LayerWeights, dilation: int
) -> tuple[np.ndarray, np.ndarray]:
    """One gated unit: returns (z, x_next) with z the recorded activation."""
    z = np.tanh(dilated_conv(x, lw.filter_w, lw.filter_b, dilation)) * _sigmoid(
        dilated_conv(x, lw.gate_w, lw.gate_b, dilation)
    )
    np.clip(z, -_OPEN_ONE, _OPEN_ONE, out=z)
    x_next = x + conv1x1(z, lw.res_w, lw.res_b)
    return z, x_next


def forward_collect(cfg: ModelConfig, w: WeightSet, mfcc: MfccSequence) -> ActivationTensor:
    """Run the stack on an MFCC sequence, capturing every layer's gated output."""
    validate_weights(cfg, w)
    coeffs = mfcc.coeffs
    if coeffs.shape[0] != cfg.n_mfcc:
        raise ShapeMismatch(f"mfcc has {coeffs.shape[0]} rows, config expects {cfg.n_mfcc}")

    dilations = cfg.layer_dilations()
    x = conv1x1(coeffs.astype(np.float64, copy=False), w.input_w, w.input_b)
    collected = np.empty((cfg.total_layers, cfg.channels, coeffs.shape[1]), dtype=np.float64)
    for i, (lw, d) in enumerate(zip(w.layers, dilations)):
        z, x = gated_block_forward(x, lw, d)
        if not np.isfinite(x).all():
            raise NonFiniteActivation(f"layer {i}: residual stream is non-finite")
        collected[i] = z
    return ActivationTensor(values=collected, utterance_id=mfcc.utterance_id)
