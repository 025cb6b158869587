"""Graphical nonlinear knockoffs (RANK) for FDR-controlled feature selection."""

from ._accel import BACKEND
from .errors import (
    DegenerateSIR, DimensionError, InvalidData, InvalidFolds, InvalidMatrix, InvalidTruth, NotPD,
    NotPSD, ParseError, RankError, ReplicationError, SmoothingError, StageError, TooFewRows,
)
from .experiment import ExperimentSummary, run_experiment
from .filter import (
    KnockoffStatVector, SelectionResult, fdp, knockoff_threshold, lcd_statistics, power,
    threshold_value,
)
from .knockoffs import (
    KnockoffTransform, PrecisionModel, Provenance, build_transform, equi_transform,
    joint_covariance, sample_knockoffs, select_s,
)
from .lasso import LassoProblem, LassoSolution, Scale, cross_validate_lambda, fit_lasso, fit_lasso_cv
from .data_io import ingest_csv
from .pipeline import RankConfig, RankRunRecord, reduce_model, run_rank, split_data
from .precision import PrecisionEstimateReport, estimate_precision_nodewise, oracle_precision
from .simulate import Dataset, Family, GeneratorSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Dataset", "DegenerateSIR", "DimensionError", "ExperimentSummary", "Family",
    "GeneratorSpec", "InvalidData", "InvalidFolds", "InvalidMatrix", "InvalidTruth",
    "KnockoffStatVector", "KnockoffTransform", "LassoProblem", "LassoSolution", "NotPD", "NotPSD",
    "ParseError", "PrecisionEstimateReport", "PrecisionModel", "Provenance", "RankConfig",
    "RankError", "RankRunRecord", "ReplicationError", "Scale", "SelectionResult",
    "SmoothingError", "StageError", "TooFewRows", "build_transform", "cross_validate_lambda",
    "equi_transform", "estimate_precision_nodewise", "fdp", "fit_lasso", "fit_lasso_cv",
    "generate", "ingest_csv", "joint_covariance", "knockoff_threshold", "lcd_statistics",
    "oracle_precision", "power", "reduce_model", "run_experiment", "run_rank",
    "sample_knockoffs", "select_s", "split_data", "threshold_value",
]
