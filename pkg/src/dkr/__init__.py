"""Divide-and-conquer kernel ridge regression with bias correction."""

from .kernels import Kernel, KernelKind, cross_gram, gaussian, gram, sobolev
from .regression import (
    Dataset,
    TrainedModel,
    Variant,
    fit,
    fit_bckrr,
    fit_bckrr_closedform,
    fit_bckrr_recentered,
    fit_bckrr_twostep,
    fit_krr,
    loo_residuals,
    predict,
    solve_spd,
)
from .distributed import EnsembleModel, PartitionPlan, ensemble_predict, fit_distributed, partition
from .tuning import TuningResult, tune_local, underregularize
from .synthetic import SyntheticSpec, generate, mse_against_target

__all__ = [
    "Dataset", "EnsembleModel", "Kernel", "KernelKind", "PartitionPlan", "SyntheticSpec",
    "TrainedModel", "TuningResult", "Variant", "cross_gram", "ensemble_predict", "fit",
    "fit_bckrr", "fit_bckrr_closedform", "fit_bckrr_recentered", "fit_bckrr_twostep",
    "fit_distributed", "fit_krr", "gaussian", "generate", "gram", "loo_residuals",
    "mse_against_target", "partition", "predict", "sobolev", "solve_spd", "tune_local",
    "underregularize",
]
