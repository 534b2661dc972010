"""Per-speaker Pearson correlation between features and emotion targets.

A correlation map holds one coefficient per (layer, channel) cell. Cells with
zero variance on either side are set to 0 and counted as degenerate instead
of failing the whole map, so dead units stay visible as a diagnostic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import IoFailure, LengthMismatch, ShapeMismatch, TooFewUtterances, ZeroVariance
from .features import FeatureMatrix
from .net import ModelConfig


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Product-moment correlation of two equal-length sequences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"x {x.shape} vs y {y.shape}")
    if x.size < 2:
        raise LengthMismatch(f"need at least 2 points, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(np.sum(dx * dx))
    vy = float(np.sum(dy * dy))
    if vx == 0.0 or vy == 0.0:
        raise ZeroVariance("constant input sequence")
    r = float(np.sum(dx * dy) / np.sqrt(vx * vy))
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class CorrelationMap:
    values: np.ndarray  # (layers, channels)
    dimension_name: str  # "valence" or "arousal"
    speaker_id: str
    degenerate_count: int


def correlation_map(fm: FeatureMatrix, dimension: str, cfg: ModelConfig) -> CorrelationMap:
    """Correlate every feature column with one target, for a single speaker's rows.

    The feature matrix must already be restricted to one speaker and its
    column count must equal layers * channels of the configuration.
    """
    speakers = set(fm.speaker_ids)
    if len(speakers) != 1:
        raise ShapeMismatch(f"expected a single-speaker matrix, got speakers {sorted(speakers)}")
    if fm.n_rows < 2:
        raise TooFewUtterances(f"{fm.n_rows} utterances, need >= 2")
    n_layers, channels = cfg.total_layers, cfg.channels
    if fm.n_features != n_layers * channels:
        raise ShapeMismatch(f"{fm.n_features} features, config implies {n_layers * channels}")

    target = fm.target(dimension)
    flat = np.zeros(fm.n_features, dtype=np.float64)
    degenerate = 0
    for j in range(fm.n_features):
        try:
            flat[j] = pearson(fm.values[:, j], target)
        except ZeroVariance:
            degenerate += 1
    return CorrelationMap(
        values=flat.reshape(n_layers, channels),
        dimension_name=dimension,
        speaker_id=next(iter(speakers)),
        degenerate_count=degenerate,
    )


def export_heatmap_csv(m: CorrelationMap, path: str | os.PathLike) -> None:
    """One row per layer, 9 significant digits, with a comment header."""
    if not os.fspath(path):
        raise IoFailure("empty output path")
    try:
        with open(path, "w") as fh:
            fh.write(f"# speaker={m.speaker_id}\n")
            fh.write(f"# dimension={m.dimension_name}\n")
            fh.write(f"# degenerate={m.degenerate_count}\n")
            for row in m.values:
                fh.write(",".join(f"{v:.9g}" for v in row) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_heatmap_csv(path: str | os.PathLike) -> CorrelationMap:
    """Inverse of export_heatmap_csv, mainly for round-trip checks."""
    meta = {"speaker": "", "dimension": "", "degenerate": "0"}
    rows = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                else:
                    rows.append([float(v) for v in line.split(",")])
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return CorrelationMap(
        values=np.array(rows, dtype=np.float64),
        dimension_name=meta["dimension"],
        speaker_id=meta["speaker"],
        degenerate_count=int(meta["degenerate"]),
    )
