"""Alternating orchestration of the two models.

Each pass fits the imaging model, turns its coefficients into penalty
weights for the outcome model, fits that, and turns the result back
into weights for the imaging model.  Weights start at exactly one (both
per-feature and per-group), so the first pass is an ordinary pair of
sparse-group fits; with alpha = 0 the weights never enter the penalties
and the loop terminates after the second pass with results identical to
independent fits.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import (
    ContinuousOutcome,
    FitResult,
    GroupStructure,
    MultiResponse,
    PenaltyWeights,
    PredictorMatrix,
    SolverConfig,
    SurvivalOutcome,
    align_features,
    cross_block_groups,
)
from .cox_solver import fit_model2_cox
from .errors import InvalidInputError, SolverError
from .linear_solver import fit_model1, fit_model2_linear
from .weights import weights_from_beta, weights_from_gamma

_log = logging.getLogger(__name__)

Outcome = Union[ContinuousOutcome, SurvivalOutcome]


@dataclass(frozen=True)
class JointProblem:
    """Everything one joint fit needs.

    ``predictors1``/``predictors2`` may be the same object (the single
    dataset case) or two matrices over an identical feature order, as
    produced by :func:`build_two_dataset_problem`.
    """

    predictors1: PredictorMatrix
    responses: MultiResponse
    predictors2: PredictorMatrix
    outcome: Outcome
    x_groups: GroupStructure
    y_groups: GroupStructure
    config1: SolverConfig
    config2: SolverConfig
    dropped_features: tuple[str, ...] = ()
    dropped_groups: tuple[str, ...] = ()

    def __post_init__(self):
        if self.predictors1.feature_names != self.predictors2.feature_names:
            raise InvalidInputError("the two predictor matrices must share feature order; "
                                    "use build_two_dataset_problem to align them")
        if self.responses.n != self.predictors1.n:
            raise InvalidInputError("responses and first predictor matrix disagree on n")
        if self.outcome.n != self.predictors2.n:
            raise InvalidInputError("outcome and second predictor matrix disagree on n")
        self.x_groups.check_width(self.predictors1.p)
        self.y_groups.check_width(self.responses.q)
        if self.config1.alpha != self.config2.alpha:
            raise InvalidInputError("the weighting exponent alpha must match across models")

    @property
    def alpha(self) -> float:
        return self.config1.alpha

    @property
    def survival(self) -> bool:
        return isinstance(self.outcome, SurvivalOutcome)


@dataclass(frozen=True)
class JointFitResult:
    model1: FitResult
    model2: FitResult
    joint_iterations: int
    converged: bool
    weight_history: tuple[tuple[PenaltyWeights, PenaltyWeights], ...] = ()

    @property
    def final_weights(self) -> tuple[PenaltyWeights, PenaltyWeights]:
        return self.weight_history[-1]


def _fit_outcome_model(problem: JointProblem, weights: PenaltyWeights) -> FitResult:
    if problem.survival:
        return fit_model2_cox(
            problem.predictors2, problem.outcome, problem.x_groups, weights, problem.config2
        )
    return fit_model2_linear(
        problem.predictors2, problem.outcome, problem.x_groups, weights, problem.config2
    )


def fit_joint(problem: JointProblem) -> JointFitResult:
    """Run the alternating fit until both coefficient sets stabilize.

    Convergence compares each model's coefficients across consecutive
    passes (max-abs change below config1.joint_tol for both).  Weights
    are deterministic functions of coefficients, so they are not checked
    separately.  Hitting max_joint_iter returns the last iterate with
    ``converged=False`` instead of raising.
    """
    p = problem.predictors1.p
    blocks = cross_block_groups(problem.x_groups, problem.y_groups)
    w_model1 = PenaltyWeights.unit(p, problem.x_groups.n_groups)

    tol = problem.config1.joint_tol
    max_pass = problem.config1.max_joint_iter
    prev_B = None
    prev_G = None
    fit1 = fit2 = None
    history: list[tuple[PenaltyWeights, PenaltyWeights]] = []
    converged = False
    passes = 0
    for m in range(1, max_pass + 1):
        passes = m
        w_used_model1 = w_model1
        try:
            fit1 = fit_model1(problem.predictors1, problem.responses, blocks, w_used_model1,
                              problem.config1)
            w_model2 = weights_from_beta(fit1.coefficients.values, problem.x_groups)
            fit2 = _fit_outcome_model(problem, w_model2)
            w_model1 = weights_from_gamma(fit2.coefficients.values, problem.x_groups)
        except SolverError as exc:
            raise SolverError(f"joint pass {m}: {exc}") from exc
        history.append((w_used_model1, w_model2))
        B = fit1.coefficients.values
        G = fit2.coefficients.values
        if prev_B is not None:
            dB = float(np.abs(B - prev_B).max())
            dG = float(np.abs(G - prev_G).max())
            if dB < tol and dG < tol:
                converged = True
                break
        prev_B, prev_G = B, G
    if not converged:
        _log.warning("joint loop stopped after %d passes without stabilizing", passes)
    return JointFitResult(
        model1=fit1,
        model2=fit2,
        joint_iterations=passes,
        converged=converged,
        weight_history=tuple(history),
    )


def _remap_groups(groups: GroupStructure, old_names, kept: dict[str, int]):
    """Carry index-based groups across a feature alignment by name."""
    new_groups = []
    dropped = []
    for name, members in groups.groups:
        remapped = tuple(
            sorted(kept[old_names[j]] for j in members if old_names[j] in kept)
        )
        if remapped:
            new_groups.append((name, remapped))
        else:
            dropped.append(name)
    return new_groups, dropped


def build_two_dataset_problem(
    predictors1: PredictorMatrix,
    responses: MultiResponse,
    predictors2: PredictorMatrix,
    outcome: Outcome,
    x_groups: GroupStructure,
    y_groups: GroupStructure,
    config1: SolverConfig,
    config2: SolverConfig,
) -> JointProblem:
    """Align two predictor matrices on shared feature names and remap groups.

    ``x_groups`` indices refer to ``predictors1`` columns.  Features
    missing from either matrix are dropped (recorded on the problem and
    logged), and groups that end up empty are dropped the same way.
    """
    aligned = align_features(predictors1, predictors2)
    kept = {name: pos for pos, name in enumerate(aligned.names)}
    dropped_features = tuple(
        sorted(set(predictors1.feature_names).symmetric_difference(predictors2.feature_names))
    )
    new_groups, dropped_groups = _remap_groups(x_groups, predictors1.feature_names, kept)
    if not new_groups:
        raise InvalidInputError("every predictor group became empty after alignment")
    if dropped_features:
        _log.info("alignment dropped %d feature(s): %s", len(dropped_features),
                  ", ".join(dropped_features[:8]))
    if dropped_groups:
        _log.info("alignment dropped empty group(s): %s", ", ".join(dropped_groups))
    return JointProblem(
        predictors1=aligned.first,
        responses=responses,
        predictors2=aligned.second,
        outcome=outcome,
        x_groups=GroupStructure(tuple(new_groups)),
        y_groups=y_groups,
        config1=config1,
        config2=config2,
        dropped_features=dropped_features,
        dropped_groups=tuple(dropped_groups),
    )
