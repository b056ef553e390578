"""Random Similarity Forests for datasets with mixed-kind features."""

from .data import Dataset, DatasetError, FeatureColumn, Graph, Kind, Ref, load_manifest, validate_dataset, write_manifest
from .evaluation import EvalReport, auc, repeated_cv, stratified_kfold
from .forest import ForestModel, Hyperparams, fit, load_model, predict, predict_proba, save_model
from .synth import SynthConfig, bag_of_items, generate
from .tree import StoppingRule

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DatasetError",
    "EvalReport",
    "FeatureColumn",
    "ForestModel",
    "Graph",
    "Hyperparams",
    "Kind",
    "Ref",
    "StoppingRule",
    "SynthConfig",
    "auc",
    "bag_of_items",
    "fit",
    "generate",
    "load_manifest",
    "load_model",
    "predict",
    "predict_proba",
    "repeated_cv",
    "save_model",
    "stratified_kfold",
    "validate_dataset",
    "write_manifest",
]
