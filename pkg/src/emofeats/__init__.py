"""Neural features from a dilated gated-conv speech net, with emotion regression."""

__version__ = "0.1.0"

from .audio import AudioBuffer, load_wav, validate_rate, write_wav
from .errors import EmofeatsError
from .features import (
    FeatureMatrix,
    NeuralFeatureVector,
    build_feature_matrix,
    layer_feature_indices,
    max_pool,
    mean_pool,
    read_feature_csv,
    write_feature_csv,
)
from .mfcc import MfccConfig, MfccSequence, compute_mfcc
from .net import ActivationTensor, ModelConfig, WeightSet, forward_collect
from .regression import RegressionModel, Scaler, mse, ols_fit, predict, select_top_k, univariate_f_scores
from .stats import CorrelationMap, correlation_map, export_heatmap_csv, pearson
from .evaluation import (
    DatasetManifest,
    EvaluationReport,
    UtteranceRecord,
    compare_feature_sets,
    consistency_filter,
    load_manifest,
    loso_folds,
    run_loso,
)
from .weights import read_weights, synth_weights, write_weights

__all__ = [
    "AudioBuffer",
    "ActivationTensor",
    "CorrelationMap",
    "DatasetManifest",
    "EmofeatsError",
    "EvaluationReport",
    "FeatureMatrix",
    "MfccConfig",
    "MfccSequence",
    "ModelConfig",
    "NeuralFeatureVector",
    "RegressionModel",
    "Scaler",
    "UtteranceRecord",
    "WeightSet",
    "build_feature_matrix",
    "compare_feature_sets",
    "compute_mfcc",
    "consistency_filter",
    "correlation_map",
    "export_heatmap_csv",
    "forward_collect",
    "layer_feature_indices",
    "load_manifest",
    "load_wav",
    "loso_folds",
    "max_pool",
    "mean_pool",
    "mse",
    "ols_fit",
    "pearson",
    "predict",
    "read_feature_csv",
    "read_weights",
    "run_loso",
    "select_top_k",
    "synth_weights",
    "univariate_f_scores",
    "validate_rate",
    "write_feature_csv",
    "write_wav",
    "write_weights",
]
