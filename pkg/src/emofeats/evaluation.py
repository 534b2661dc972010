"""Dataset manifest handling, leave-one-speaker-out cross-validation, reports.

A manifest row carries one utterance: id, session, speaker, wav path, scalar
valence/arousal in [1, 5], and optionally the per-annotator rating lists the
scalars average. Evaluation holds out one speaker per fold; scaling, feature
selection and regression see training rows only.

Aggregates report mean, population variance, and standard deviation of the
per-fold MSEs. Comparison tables keep variance and standard deviation side by
side since conventions differ on which of the two to print; the variance
column is the one used for comparisons.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConsistencyDataMissing,
    DimensionMismatch,
    DuplicateId,
    FoldFailure,
    FoldStructureMismatch,
    IoFailure,
    ParseError,
    RangeViolation,
    TooFewSpeakers,
)
from .features import FeatureMatrix
from .regression import RegressionModel, fit_selected, mse, predict

MANIFEST_COLUMNS = ("utterance_id", "session", "speaker_id", "wav_path", "valence", "arousal")
RATING_COLUMNS = ("valence_ratings", "arousal_ratings")
DIMENSIONS = ("valence", "arousal")

RATING_MEAN_TOLERANCE = 1e-6


@dataclass(frozen=True)
class UtteranceRecord:
    utterance_id: str
    session: int
    speaker_id: str
    wav_path: str
    valence: float
    arousal: float
    valence_ratings: tuple[float, ...] | None = None
    arousal_ratings: tuple[float, ...] | None = None

    def target(self, dimension: str) -> float:
        return self.valence if dimension == "valence" else self.arousal


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[UtteranceRecord, ...]

    @property
    def speakers(self) -> list[str]:
        return sorted({r.speaker_id for r in self.records})

    def by_id(self) -> dict[str, UtteranceRecord]:
        return {r.utterance_id: r for r in self.records}

    def __len__(self) -> int:
        return len(self.records)


def _parse_ratings(cell: str, row: int) -> tuple[float, ...] | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        return tuple(float(v) for v in cell.split(";"))
    except ValueError as exc:
        raise ParseError(f"bad rating list {cell!r}", row=row) from exc


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    """Parse and validate a manifest CSV."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc

    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty manifest", row=1) from None
        header = [h.strip() for h in header]
        if tuple(header[:6]) != MANIFEST_COLUMNS:
            raise ParseError(f"header {header[:6]}, expected {list(MANIFEST_COLUMNS)}", row=1)
        has_ratings = tuple(header[6:8]) == RATING_COLUMNS

        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 6:
                raise ParseError(f"only {len(row)} cells", row=lineno)
            try:
                uid = row[0].strip()
                session = int(row[1])
                speaker = row[2].strip()
                wav_path = row[3].strip()
                valence = float(row[4])
                arousal = float(row[5])
            except ValueError as exc:
                raise ParseError(str(exc), row=lineno) from exc
            if not uid:
                raise ParseError("empty utterance_id", row=lineno)
            if not wav_path:
                raise ParseError("empty wav_path", row=lineno)
            if uid in seen:
                raise DuplicateId(f"row {lineno}: utterance_id {uid!r} repeated")
            seen.add(uid)
            for name, value in (("valence", valence), ("arousal", arousal)):
                if not (1.0 <= value <= 5.0):
                    raise RangeViolation(f"row {lineno}: {name} {value} outside [1, 5]")

            v_ratings = a_ratings = None
            if has_ratings and len(row) >= 8:
                v_ratings = _parse_ratings(row[6], lineno)
                a_ratings = _parse_ratings(row[7], lineno)
            for name, scalar, ratings in (
                ("valence", valence, v_ratings),
                ("arousal", arousal, a_ratings),
            ):
                if ratings and abs(scalar - sum(ratings) / len(ratings)) > RATING_MEAN_TOLERANCE:
                    raise ParseError(
                        f"{name} {scalar} is not the mean of ratings {list(ratings)}", row=lineno
                    )
            records.append(
                UtteranceRecord(uid, session, speaker, wav_path, valence, arousal, v_ratings, a_ratings)
            )
    if not records:
        raise ParseError("no data rows", row=2)
    return DatasetManifest(records=tuple(records))


def consistency_filter(manifest: DatasetManifest, max_spread: float = 1.0) -> DatasetManifest:
    """Keep utterances whose annotators agree within max_spread on both dimensions."""
    kept = []
    for r in manifest.records:
        if r.valence_ratings is None or r.arousal_ratings is None:
            raise ConsistencyDataMissing(f"{r.utterance_id}: no rating lists")
        if (
            max(r.valence_ratings) - min(r.valence_ratings) <= max_spread
            and max(r.arousal_ratings) - min(r.arousal_ratings) <= max_spread
        ):
            kept.append(r)
    return DatasetManifest(records=tuple(kept))


@dataclass(frozen=True)
class LosoFold:
    speaker_id: str
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


def loso_folds(manifest: DatasetManifest) -> list[LosoFold]:
    """One fold per speaker, ordered by speaker id."""
    speakers = manifest.speakers
    if len(speakers) < 2:
        raise TooFewSpeakers(f"{len(speakers)} speaker(s), need >= 2")
    folds = []
    for spk in speakers:
        test = tuple(r.utterance_id for r in manifest.records if r.speaker_id == spk)
        train = tuple(r.utterance_id for r in manifest.records if r.speaker_id != spk)
        folds.append(LosoFold(speaker_id=spk, train_ids=train, test_ids=test))
    return folds


@dataclass
class FoldResult:
    speaker_id: str
    test_count: int
    mse: dict[str, float]  # dimension -> value
    models: dict[str, RegressionModel] | None = None


@dataclass
class EvaluationReport:
    feature_set_name: str
    k: int
    layer_selector: str
    filter_settings: dict
    speakers: list[str]
    folds: list[FoldResult]
    aggregates: dict[str, dict[str, float]] = field(default_factory=dict)

    def recompute_aggregates(self) -> None:
        self.aggregates = {}
        for dim in DIMENSIONS:
            values = np.array([f.mse[dim] for f in self.folds], dtype=np.float64)
            variance = float(np.var(values))
            self.aggregates[dim] = {
                "mean": float(np.mean(values)),
                "variance": variance,
                "std": float(np.sqrt(variance)),
            }


@dataclass
class RunLosoConfig:
    k: int = 100
    candidate_mask: np.ndarray | None = None
    layer_selector: str = "all"
    dimensions: tuple[str, ...] = DIMENSIONS
    keep_models: bool = False
    filter_settings: dict = field(default_factory=dict)


def run_loso(fm: FeatureMatrix, manifest: DatasetManifest, cfg: RunLosoConfig) -> EvaluationReport:
    """Cross-validate one feature set; no test-fold information leaks into fits.

    Targets come from the manifest; feature rows are matched by utterance id
    and must cover every manifest record.
    """
    row_of = {uid: i for i, uid in enumerate(fm.utterance_ids)}
    missing = [r.utterance_id for r in manifest.records if r.utterance_id not in row_of]
    if missing:
        raise DimensionMismatch(f"feature matrix missing utterances {missing[:5]}")
    by_id = manifest.by_id()

    folds = loso_folds(manifest)
    results: list[FoldResult] = []
    for fold in folds:
        train_rows = np.array([row_of[u] for u in fold.train_ids], dtype=int)
        test_rows = np.array([row_of[u] for u in fold.test_ids], dtype=int)
        x_train = fm.values[train_rows]
        x_test = fm.values[test_rows]
        fold_mse: dict[str, float] = {}
        fold_models: dict[str, RegressionModel] = {}
        try:
            for dim in cfg.dimensions:
                y_train = np.array([by_id[u].target(dim) for u in fold.train_ids])
                y_test = np.array([by_id[u].target(dim) for u in fold.test_ids])
                model = fit_selected(x_train, y_train, cfg.k, cfg.candidate_mask, target_name=dim)
                fold_mse[dim] = mse(predict(model, x_test), y_test)
                fold_models[dim] = model
        except Exception as exc:
            raise FoldFailure(fold.speaker_id, exc) from exc
        results.append(
            FoldResult(
                speaker_id=fold.speaker_id,
                test_count=len(fold.test_ids),
                mse=fold_mse,
                models=fold_models if cfg.keep_models else None,
            )
        )

    report = EvaluationReport(
        feature_set_name=fm.feature_set_name,
        k=cfg.k,
        layer_selector=cfg.layer_selector,
        filter_settings=dict(cfg.filter_settings),
        speakers=[f.speaker_id for f in folds],
        folds=results,
    )
    report.recompute_aggregates()
    return report


@dataclass
class ComparisonRow:
    feature_set_name: str
    arousal_mean: float
    arousal_variance: float
    arousal_std: float
    valence_mean: float
    valence_variance: float
    valence_std: float
    best_arousal: bool = False
    best_valence: bool = False


def compare_feature_sets(reports: list[EvaluationReport]) -> list[ComparisonRow]:
    """Side-by-side table of per-dimension MSE aggregates across feature sets."""
    if not reports:
        raise FoldStructureMismatch("no reports to compare")
    reference = reports[0]
    for rep in reports[1:]:
        if rep.speakers != reference.speakers:
            raise FoldStructureMismatch(
                f"{rep.feature_set_name}: speakers {rep.speakers} != {reference.speakers}"
            )
        if [f.test_count for f in rep.folds] != [f.test_count for f in reference.folds]:
            raise FoldStructureMismatch(f"{rep.feature_set_name}: fold sizes differ")

    rows = [
        ComparisonRow(
            feature_set_name=rep.feature_set_name,
            arousal_mean=rep.aggregates["arousal"]["mean"],
            arousal_variance=rep.aggregates["arousal"]["variance"],
            arousal_std=rep.aggregates["arousal"]["std"],
            valence_mean=rep.aggregates["valence"]["mean"],
            valence_variance=rep.aggregates["valence"]["variance"],
            valence_std=rep.aggregates["valence"]["std"],
        )
        for rep in reports
    ]
    min_arousal = min(r.arousal_mean for r in rows)
    min_valence = min(r.valence_mean for r in rows)
    for r in rows:
        r.best_arousal = r.arousal_mean == min_arousal
        r.best_valence = r.valence_mean == min_valence
    return rows


def write_fold_csv(reports: list[EvaluationReport], path: str | os.PathLike) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature_set", "speaker", "dimension", "mse"])
            for rep in reports:
                for fold in rep.folds:
                    for dim in DIMENSIONS:
                        if dim in fold.mse:
                            writer.writerow([rep.feature_set_name, fold.speaker_id, dim, repr(fold.mse[dim])])
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def write_comparison_csv(rows: list[ComparisonRow], path: str | os.PathLike) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["feature_set", "arousal_mean", "arousal_variance", "arousal_std",
                 "valence_mean", "valence_variance", "valence_std", "best_arousal", "best_valence"]
            )
            for r in rows:
                writer.writerow(
                    [r.feature_set_name, repr(r.arousal_mean), repr(r.arousal_variance), repr(r.arousal_std),
                     repr(r.valence_mean), repr(r.valence_variance), repr(r.valence_std),
                     int(r.best_arousal), int(r.best_valence)]
                )
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def format_comparison_table(rows: list[ComparisonRow]) -> str:
    """Aligned plain-text table; * marks the lowest mean per dimension."""
    header = f"{'feature set':<20} {'arousal mean':>14} {'arousal var':>12} {'valence mean':>14} {'valence var':>12}"
    lines = [header, "-" * len(header)]
    for r in rows:
        a_mark = "*" if r.best_arousal else " "
        v_mark = "*" if r.best_valence else " "
        lines.append(
            f"{r.feature_set_name:<20} {r.arousal_mean:>13.6f}{a_mark} {r.arousal_variance:>12.6f} "
            f"{r.valence_mean:>13.6f}{v_mark} {r.valence_variance:>12.6f}"
        )
    return "\n".join(lines) + "\n"
