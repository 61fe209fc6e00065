"""windcompare: space-time power performance comparison for wind turbine fleets.

Pipeline per pairwise comparison: covariate subset selection (CV kNN),
threshold-based hierarchical covariate matching, GP power-curve fitting
with a functional difference test, and reduction to kW / percent metrics.
"""

__version__ = "0.1.0"

from ._kernels import backend_name
from .dataset import Dataset, Period, PeriodPartition, ScadaRecord
from .gp import (
    DifferenceCurve,
    GpModel,
    HypothesisTest,
    Kernel,
    TestGrid,
    build_test_grid,
    difference_band,
    fit_gp,
    fit_hyperparameters,
    gp_predict,
    hypothesis_test,
    pooled_mean,
)
from .ingest import aggregate_high_frequency, parse_scada, partition
from .matching import (
    MatchResult,
    MatchSpec,
    match_one_way,
    match_two_way,
    matching_diagnostics,
    verify_threshold_certificate,
)
from .metrics import (
    ComparisonMetrics,
    compute_metrics,
    control_test_adjust,
    delta_scaled,
    delta_statistical,
    delta_unweighted,
    delta_weighted,
    frequency_weights,
)
from .selection import SelectionResult, backward_select, cv_rmse, forward_select, knn_predict
from .synthetic import SyntheticConfig, UpgradeSpec, apply_upgrade, effective_increase, generate

__all__ = [
    "__version__",
    "backend_name",
    "Dataset",
    "Period",
    "PeriodPartition",
    "ScadaRecord",
    "DifferenceCurve",
    "GpModel",
    "HypothesisTest",
    "Kernel",
    "TestGrid",
    "build_test_grid",
    "difference_band",
    "fit_gp",
    "fit_hyperparameters",
    "gp_predict",
    "hypothesis_test",
    "pooled_mean",
    "aggregate_high_frequency",
    "parse_scada",
    "partition",
    "MatchResult",
    "MatchSpec",
    "match_one_way",
    "match_two_way",
    "matching_diagnostics",
    "verify_threshold_certificate",
    "ComparisonMetrics",
    "compute_metrics",
    "control_test_adjust",
    "delta_scaled",
    "delta_statistical",
    "delta_unweighted",
    "delta_weighted",
    "frequency_weights",
    "SelectionResult",
    "backward_select",
    "cv_rmse",
    "forward_select",
    "knn_predict",
    "SyntheticConfig",
    "UpgradeSpec",
    "apply_upgrade",
    "effective_increase",
    "generate",
]
