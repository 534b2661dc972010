"""Univariate F-score feature selection and least-squares regression.

The relevance score of a column is F = r^2 (N - 2) / (1 - r^2) with r the
Pearson correlation against the target, which ranks features exactly like
|r|. The regression solves the normal equations of [1 X] with a tiny ridge
term (1e-8) on the Gram diagonal so constant or duplicated columns cannot
abort a fold; for well-conditioned systems the perturbation is far below
test tolerances.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    IoFailure,
    KTooLarge,
    LengthMismatch,
    NumericalFailure,
    TooFewSamples,
)

STD_FLOOR = 1e-12
RIDGE_JITTER = 1e-8
_R2_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class Scaler:
    """Column-wise standardization statistics, fitted on training rows only."""

    means: np.ndarray
    stds: np.ndarray  # floored, always > 0

    @classmethod
    def fit(cls, x: np.ndarray) -> "Scaler":
        x = np.asarray(x, dtype=np.float64)
        means = x.mean(axis=0)
        stds = x.std(axis=0)
        return cls(means=means, stds=np.maximum(stds, STD_FLOOR))

    @classmethod
    def identity(cls, n_features: int) -> "Scaler":
        return cls(means=np.zeros(n_features), stds=np.ones(n_features))

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != self.means.size:
            raise DimensionMismatch(f"{x.shape[1]} columns, scaler has {self.means.size}")
        return (x - self.means) / self.stds


@dataclass
class RegressionModel:
    intercept: float
    coeffs: np.ndarray  # (k,)
    selected_indices: np.ndarray  # (k,) into the raw feature space
    scaler: Scaler  # over the raw feature space
    target_name: str = ""


def univariate_f_scores(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-column regression F-statistic against the target.

    Zero-variance columns score 0; r^2 is clamped below 1 so perfectly
    correlated columns stay finite and comparable.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if n < 3:
        raise TooFewSamples(f"need N >= 3, got {n}")
    if x.shape[0] != n:
        raise LengthMismatch(f"X has {x.shape[0]} rows, y has {n}")

    dx = x - x.mean(axis=0)
    dy = y - y.mean()
    x_norm = np.sqrt(np.sum(dx * dx, axis=0))
    y_norm = float(np.sqrt(np.sum(dy * dy)))
    denom = x_norm * y_norm
    live = denom > 0.0
    r = np.zeros(x.shape[1], dtype=np.float64)
    np.divide(dy @ dx, denom, out=r, where=live)
    r2 = np.minimum(r * r, _R2_CLAMP)
    scores = r2 / (1.0 - r2) * (n - 2)
    scores[~live] = 0.0
    return scores


def select_top_k(scores: np.ndarray, k: int, candidate_mask: np.ndarray | None = None) -> np.ndarray:
    """Indices of the k largest scores within the mask, sorted ascending.

    Ties break toward the lower feature index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if candidate_mask is None:
        candidates = np.arange(scores.size)
    else:
        candidates = np.asarray(candidate_mask, dtype=int)
    if k > candidates.size:
        raise KTooLarge(f"k={k} exceeds {candidates.size} candidate features")
    if k < 1:
        raise KTooLarge(f"k={k} must be >= 1")
    # stable sort on negated scores keeps lower indices first among ties
    order = np.argsort(-scores[candidates], kind="stable")
    chosen = candidates[order[:k]]
    return np.sort(chosen)


def ols_fit(
    x: np.ndarray,
    y: np.ndarray,
    selected_indices: np.ndarray | None = None,
    scaler: Scaler | None = None,
    target_name: str = "",
) -> RegressionModel:
    """Least squares on already selected (and standardized) columns.

    selected_indices and scaler describe how x was derived from the raw
    feature space and are stored on the model for predict(); they default to
    the identity mapping.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise DimensionMismatch(f"X {x.shape} vs y {y.shape}")
    n, k = x.shape
    if n < 1:
        raise TooFewSamples("empty training set")

    design = np.concatenate([np.ones((n, 1)), x], axis=1)
    gram = design.T @ design
    gram[np.diag_indices_from(gram)] += RIDGE_JITTER
    rhs = design.T @ y
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    if not np.isfinite(beta).all():
        raise NumericalFailure("non-finite regression solution")

    if selected_indices is None:
        selected_indices = np.arange(k)
    selected_indices = np.asarray(selected_indices, dtype=int)
    if selected_indices.size != k:
        raise DimensionMismatch(f"{selected_indices.size} indices for {k} columns")
    if scaler is None:
        scaler = Scaler.identity(int(selected_indices.max(initial=-1)) + 1 if k else 0)
    return RegressionModel(
        intercept=float(beta[0]),
        coeffs=beta[1:].copy(),
        selected_indices=selected_indices,
        scaler=scaler,
        target_name=target_name,
    )


def predict(model: RegressionModel, x_raw: np.ndarray) -> np.ndarray:
    """Standardize, slice the selected columns, apply the affine map."""
    x_raw = np.asarray(x_raw, dtype=np.float64)
    if x_raw.ndim != 2:
        raise DimensionMismatch(f"expected 2-D input, got {x_raw.shape}")
    if model.selected_indices.size and x_raw.shape[1] <= int(model.selected_indices.max()):
        raise DimensionMismatch(
            f"{x_raw.shape[1]} columns, model selects up to index {int(model.selected_indices.max())}"
        )
    x_std = model.scaler.transform(x_raw)
    return x_std[:, model.selected_indices] @ model.coeffs + model.intercept


def mse(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size < 1:
        raise LengthMismatch(f"pred {pred.shape} vs truth {truth.shape}")
    diff = pred - truth
    return float(np.mean(diff * diff))


def fit_selected(
    x_raw_train: np.ndarray,
    y_train: np.ndarray,
    k: int,
    candidate_mask: np.ndarray | None = None,
    target_name: str = "",
) -> RegressionModel:
    """Full training path: scaler -> F scores -> top-k -> least squares."""
    scaler = Scaler.fit(x_raw_train)
    x_std = scaler.transform(x_raw_train)
    scores = univariate_f_scores(x_std, y_train)
    selected = select_top_k(scores, k, candidate_mask)
    return ols_fit(x_std[:, selected], y_train, selected_indices=selected, scaler=scaler, target_name=target_name)


def write_model_csv(model: RegressionModel, path: str | os.PathLike) -> None:
    """Audit dump: selected index, coefficient, scaler mean/std, plus intercept."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "index", "value", "mean", "std"])
            writer.writerow(["intercept", "", repr(model.intercept), "", ""])
            for idx, coef in zip(model.selected_indices, model.coeffs):
                j = int(idx)
                writer.writerow(
                    ["coefficient", j, repr(float(coef)),
                     repr(float(model.scaler.means[j])), repr(float(model.scaler.stds[j]))]
                )
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
