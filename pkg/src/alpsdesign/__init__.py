"""Surrogate-driven inverse design: batch greedy random-forest search, baselines and benchmarks."""

from .alps import AlpsConfig, AlpsResult, alps_run, greedy_select, warm_start_export, warm_start_load
from .core import (
    Bounds,
    DesignVector,
    EvaluationLedger,
    EvaluationRecord,
    RngSeed,
    TargetCurve,
    best_so_far_trace,
    ledger_record,
    rmse,
)
from .forest import ForestModel, ForestParams, forest_fit, forest_predict
from .pca import PcaModel, pca_fit, pca_inverse, pca_transform
from .sampling import lhs, uniform

__version__ = "0.1.0"
