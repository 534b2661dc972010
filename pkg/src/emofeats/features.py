"""Per-utterance feature vectors pooled from activation tensors.

Feature index layout is layer-major: feature j belongs to layer j // channels
and channel j % channels, so restricting selection to the first or last k
layers is a contiguous index range.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DuplicateId, EmptyTensor, IoFailure, KOutOfRange, ParseError, RangeViolation
from .net import ActivationTensor, ModelConfig

METADATA_COLUMNS = ("utterance_id", "speaker_id", "session", "valence", "arousal")


@dataclass(frozen=True)
class NeuralFeatureVector:
    values: np.ndarray  # (layers * channels,)
    utterance_id: str
    channels: int

    def layer_of(self, j: int) -> int:
        return j // self.channels


def mean_pool(a: ActivationTensor) -> NeuralFeatureVector:
    """Average each unit's activation over time."""
    if a.frame_count < 1:
        raise EmptyTensor(a.utterance_id)
    pooled = a.values.mean(axis=2).reshape(-1)
    return NeuralFeatureVector(pooled, a.utterance_id, a.channel_count)


def max_pool(a: ActivationTensor) -> NeuralFeatureVector:
    """Take each unit's maximum activation over time."""
    if a.frame_count < 1:
        raise EmptyTensor(a.utterance_id)
    pooled = a.values.max(axis=2).reshape(-1)
    return NeuralFeatureVector(pooled, a.utterance_id, a.channel_count)


def layer_feature_indices(cfg: ModelConfig, selector: str, k: int | None = None) -> np.ndarray:
    """Feature indices of the first k, last k, or all layers.

    selector is one of "first_k", "last_k", "all"; k is ignored for "all".
    """
    n_layers, c = cfg.total_layers, cfg.channels
    if selector == "all":
        return np.arange(n_layers * c)
    if k is None or not (1 <= k <= n_layers):
        raise KOutOfRange(f"k={k} with {n_layers} layers")
    if selector == "first_k":
        return np.arange(0, k * c)
    if selector == "last_k":
        return np.arange((n_layers - k) * c, n_layers * c)
    raise KOutOfRange(f"unknown selector {selector!r}")


@dataclass
class FeatureMatrix:
    """N utterances x D features with target metadata per row."""

    values: np.ndarray  # (N, D) float64
    utterance_ids: list[str]
    speaker_ids: list[str]
    sessions: list[int]
    valence: np.ndarray  # (N,)
    arousal: np.ndarray
    feature_names: list[str]
    feature_set_name: str = "neural"

    def __post_init__(self):
        n, d = self.values.shape
        lengths = {len(self.utterance_ids), len(self.speaker_ids), len(self.sessions), self.valence.size, self.arousal.size}
        if lengths != {n}:
            raise DimensionMismatch(f"metadata lengths {lengths} vs {n} rows")
        if len(self.feature_names) != d:
            raise DimensionMismatch(f"{len(self.feature_names)} names for {d} columns")
        if not np.isfinite(self.values).all():
            raise RangeViolation("feature matrix contains NaN/Inf")
        if len(set(self.utterance_ids)) != n:
            raise DuplicateId("duplicate utterance ids in feature matrix")
        for name, arr in (("valence", self.valence), ("arousal", self.arousal)):
            if arr.size and (arr.min() < 1.0 or arr.max() > 5.0):
                raise RangeViolation(f"{name} outside [1, 5]")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def target(self, dimension: str) -> np.ndarray:
        if dimension == "valence":
            return self.valence
        if dimension == "arousal":
            return self.arousal
        raise DimensionMismatch(f"unknown target dimension {dimension!r}")

    def rows_for_speaker(self, speaker_id: str) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.speaker_ids) if s == speaker_id], dtype=int)


def neural_feature_names(n_features: int) -> list[str]:
    return [f"f{j:04d}" for j in range(n_features)]


def subset_rows(fm: FeatureMatrix, row_indices: np.ndarray) -> FeatureMatrix:
    """New matrix restricted to the given rows, order preserved."""
    idx = np.asarray(row_indices, dtype=int)
    return FeatureMatrix(
        values=fm.values[idx].copy(),
        utterance_ids=[fm.utterance_ids[i] for i in idx],
        speaker_ids=[fm.speaker_ids[i] for i in idx],
        sessions=[fm.sessions[i] for i in idx],
        valence=fm.valence[idx].copy(),
        arousal=fm.arousal[idx].copy(),
        feature_names=list(fm.feature_names),
        feature_set_name=fm.feature_set_name,
    )


def build_feature_matrix(
    vectors: list[NeuralFeatureVector],
    metadata: dict[str, tuple[str, int, float, float]],
    feature_set_name: str = "neural",
) -> FeatureMatrix:
    """Assemble pooled vectors plus (speaker, session, valence, arousal) metadata."""
    if not vectors:
        raise EmptyTensor("no feature vectors")
    values = np.stack([v.values for v in vectors])
    ids = [v.utterance_id for v in vectors]
    missing = [u for u in ids if u not in metadata]
    if missing:
        raise DimensionMismatch(f"no metadata for utterances {missing[:5]}")
    speakers = [metadata[u][0] for u in ids]
    sessions = [metadata[u][1] for u in ids]
    valence = np.array([metadata[u][2] for u in ids], dtype=np.float64)
    arousal = np.array([metadata[u][3] for u in ids], dtype=np.float64)
    return FeatureMatrix(
        values=values,
        utterance_ids=ids,
        speaker_ids=speakers,
        sessions=sessions,
        valence=valence,
        arousal=arousal,
        feature_names=neural_feature_names(values.shape[1]),
        feature_set_name=feature_set_name,
    )


def write_feature_csv(fm: FeatureMatrix, path: str | os.PathLike) -> None:
    """CSV with header utterance_id,speaker_id,session,valence,arousal,<features>.

    Floats are written with repr so a read back is bit-exact.
    """
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(METADATA_COLUMNS) + fm.feature_names)
            for i in range(fm.n_rows):
                row = [
                    fm.utterance_ids[i],
                    fm.speaker_ids[i],
                    str(fm.sessions[i]),
                    repr(float(fm.valence[i])),
                    repr(float(fm.arousal[i])),
                ]
                row.extend(repr(float(v)) for v in fm.values[i])
                writer.writerow(row)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_feature_csv(path: str | os.PathLike, feature_set_name: str | None = None) -> FeatureMatrix:
    """Read a feature CSV; every column after the five metadata ones is a feature."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty feature file", row=1) from None
        if tuple(header[:5]) != METADATA_COLUMNS:
            raise ParseError(
                f"header starts {header[:5]}, expected {list(METADATA_COLUMNS)}", row=1
            )
        feature_names = header[5:]
        ids, speakers, sessions, valence, arousal, rows = [], [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{len(row)} cells, header has {len(header)}", row=lineno)
            try:
                ids.append(row[0])
                speakers.append(row[1])
                sessions.append(int(row[2]))
                valence.append(float(row[3]))
                arousal.append(float(row[4]))
                rows.append(np.array([float(v) for v in row[5:]], dtype=np.float64))
            except ValueError as exc:
                raise ParseError(str(exc), row=lineno) from exc
        if not rows:
            raise ParseError("no data rows", row=2)
    name = feature_set_name if feature_set_name is not None else os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return FeatureMatrix(
        values=np.stack(rows),
        utterance_ids=ids,
        speaker_ids=speakers,
        sessions=sessions,
        valence=np.array(valence),
        arousal=np.array(arousal),
        feature_names=feature_names,
        feature_set_name=name,
    )
