"""Alternately reweighted sparse group lasso for paired regression models.

Model 1 regresses a multivariate response panel on a common design; model
2 regresses a continuous or right-censored outcome on the same features.
Each model's fitted coefficients set per-feature and per-group penalty
weights for the other, and the pair is iterated to a fixed point.
"""

from .core import (
    BlockGroupStructure,
    CoefficientMatrix,
    CoefficientVector,
    ContinuousOutcome,
    FitResult,
    GroupStructure,
    IterationCounts,
    MultiResponse,
    PenaltyWeights,
    PredictorMatrix,
    SolverConfig,
    SurvivalOutcome,
    align_features,
    cross_block_groups,
    groups_as_blocks,
    standardize,
)
from .cox_solver import cox_gradient, fit_model2_cox, linear_predictor
from .errors import (
    AlignmentError,
    CalibrationError,
    DataFormatError,
    InvalidInputError,
    SolverError,
)
from .joint import JointFitResult, JointProblem, build_two_dataset_problem, fit_joint
from .linear_solver import fit_model1, fit_model2_linear
from .metrics import (
    SelectionRates,
    null_prediction_error,
    prediction_error,
    rrpe,
    support_vector,
    survival_auc,
    tpr_tnr,
)
from .simgen import (
    GroundTruth,
    SimulationScenario,
    calibrate_censoring_rate,
    gen_linear,
    gen_survival,
    gen_test_outcome,
    preset_names,
    scenario_presets,
)
from .study import StudyConfig, StudyResult, run_replication, run_study
from .tuning import CvCell, cv_grid_search, default_grid, lambda_max, make_folds
from .weights import (
    clamp_log,
    group_norms,
    unit_mean_weights,
    weights_from_beta,
    weights_from_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BlockGroupStructure",
    "CalibrationError",
    "CoefficientMatrix",
    "CoefficientVector",
    "ContinuousOutcome",
    "CvCell",
    "DataFormatError",
    "FitResult",
    "GroundTruth",
    "GroupStructure",
    "InvalidInputError",
    "IterationCounts",
    "JointFitResult",
    "JointProblem",
    "MultiResponse",
    "PenaltyWeights",
    "PredictorMatrix",
    "SelectionRates",
    "SimulationScenario",
    "SolverConfig",
    "SolverError",
    "StudyConfig",
    "StudyResult",
    "SurvivalOutcome",
    "align_features",
    "build_two_dataset_problem",
    "calibrate_censoring_rate",
    "clamp_log",
    "cox_gradient",
    "cross_block_groups",
    "cv_grid_search",
    "default_grid",
    "fit_joint",
    "fit_model1",
    "fit_model2_cox",
    "fit_model2_linear",
    "gen_linear",
    "gen_survival",
    "gen_test_outcome",
    "group_norms",
    "groups_as_blocks",
    "lambda_max",
    "linear_predictor",
    "make_folds",
    "null_prediction_error",
    "prediction_error",
    "preset_names",
    "rrpe",
    "run_replication",
    "run_study",
    "scenario_presets",
    "standardize",
    "support_vector",
    "survival_auc",
    "tpr_tnr",
    "unit_mean_weights",
    "weights_from_beta",
    "weights_from_gamma",
]
