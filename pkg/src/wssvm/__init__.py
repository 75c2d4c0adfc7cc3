"""Kernel support vector machines trained with a working-set dual solver.

Binary and one-vs-one multiclass classification, epsilon-insensitive
regression, four kernels, scaling, k-fold cross-validation and grid tuning.
"""
from ._backend import available as available_backends, backend_name, set_backend
from .data import Dataset, KernelSpec, Problem, ScalerParams, SvmModel, TrainConfig, validate_dataset
from .io import load_model, parse_csv, parse_sparse_file, save_model
from .preprocess import (
    TuneGrid, apply_scaler, cross_validate, fit_scaler, grid_tune, kfold_split, metrics,
)
from .oracle import DenseQP, oracle_active_set, oracle_projected_gradient
from .solver import train_dual
from .tasks import build_svc_problem, build_svr_problem, predict, train

__version__ = "0.1.0"

__all__ = [
    "Dataset", "DenseQP", "KernelSpec", "Problem", "ScalerParams", "SvmModel", "TrainConfig", "TuneGrid",
    "apply_scaler", "available_backends", "backend_name", "build_svc_problem", "build_svr_problem",
    "cross_validate", "fit_scaler", "grid_tune", "kfold_split", "load_model", "metrics",
    "oracle_active_set", "oracle_projected_gradient",
    "parse_csv", "parse_sparse_file", "predict", "save_model", "set_backend", "train",
    "train_dual", "validate_dataset",
]
