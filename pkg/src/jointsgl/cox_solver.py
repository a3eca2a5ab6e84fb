"""Penalized Cox regression for the survival outcome model.

Ties are handled Breslow-style: a risk set contains every subject whose
time is at least the event time, including other members of the same
tie group.  The heavy loop lives in the compiled kernel; subjects are
sorted by time once per fit so risk sets become suffix ranges.
"""
from __future__ import annotations

import logging

import numpy as np

from . import _kernels
from .core import (
    CoefficientVector,
    FitResult,
    GroupStructure,
    IterationCounts,
    PenaltyWeights,
    SolverConfig,
    SurvivalOutcome,
    groups_as_blocks,
)
from .errors import InvalidInputError, SolverError
from .linear_solver import _cell_maps, _check_weights, _design
from .prox import cox_partial_gradient, effective_penalties

_log = logging.getLogger(__name__)


def _coef_vector(gamma) -> np.ndarray:
    if isinstance(gamma, CoefficientVector):
        return gamma.values
    arr = np.asarray(gamma, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError("coefficients must form a vector")
    return arr


def linear_predictor(X, gamma) -> np.ndarray:
    """Risk scores X @ gamma."""
    return _design(X) @ _coef_vector(gamma)


def cox_gradient(X, surv: SurvivalOutcome, gamma) -> np.ndarray:
    """Gradient of the averaged negative log partial likelihood at gamma."""
    g = _coef_vector(gamma)
    if not np.isfinite(g).all():
        raise InvalidInputError("gradient requested at non-finite coefficients")
    Xa = _design(X)
    if Xa.shape[0] != surv.n:
        raise InvalidInputError(
            f"predictors have {Xa.shape[0]} rows but outcome has {surv.n}"
        )
    return cox_partial_gradient(Xa, surv.time, surv.event, g)


def _sorted_views(Xa: np.ndarray, surv: SurvivalOutcome):
    """Ascending-time views plus tie-group starts; risk sets are suffixes."""
    order = np.argsort(surv.time, kind="stable")
    time_s = surv.time[order]
    event_s = np.ascontiguousarray(surv.event[order], dtype=np.int64)
    XT_s = np.ascontiguousarray(Xa[order].T, dtype=np.float64)
    n = time_s.shape[0]
    tie_first = np.zeros(n, dtype=np.int64)
    start = 0
    for s in range(1, n):
        if time_s[s] != time_s[s - 1]:
            start = s
        tie_first[s] = start
    return order, XT_s, event_s, tie_first


def fit_model2_cox(X, surv: SurvivalOutcome, groups: GroupStructure,
                   weights: PenaltyWeights, cfg: SolverConfig,
                   revive: bool = True) -> FitResult:
    """Fit the survival outcome model by accelerated coordinate descent."""
    Xa = _design(X)
    if Xa.shape[0] != surv.n:
        raise InvalidInputError(
            f"predictors have {Xa.shape[0]} rows but outcome has {surv.n}"
        )
    p = Xa.shape[1]
    groups.check_width(p)
    blocks = groups_as_blocks(groups)
    _check_weights(weights, p, blocks)
    lam_feat, lam_block = effective_penalties(p, blocks, weights, cfg)
    maps = _cell_maps(blocks, p, 1)
    _, XT_s, event_s, tie_first = _sorted_views(Xa, surv)
    gamma = np.zeros(p)
    status, err_j, _, outer, converged, inner_total, floor_hits, objectives, _ = (
        _kernels.cox_fit(
            XT_s, event_s, tie_first, gamma, *maps,
            np.ascontiguousarray(lam_feat, dtype=np.float64),
            np.ascontiguousarray(lam_block, dtype=np.float64),
            cfg.inner_tol, cfg.max_inner_iter, cfg.outer_tol, cfg.max_outer_iter,
            cfg.step_init, cfg.step_shrink, revive,
        )
    )
    if status != 0:
        where = f" at coefficient {err_j}" if err_j >= 0 else ""
        raise SolverError(f"survival solver produced a non-finite update{where}")
    if floor_hits:
        _log.warning("backtracking hit the step floor %d time(s)", floor_hits)
    if not converged:
        _log.warning("survival fit stopped at max_outer_iter=%d without reaching outer_tol",
                     cfg.max_outer_iter)
    path = tuple(float(v) for v in objectives[:outer])
    return FitResult(
        coefficients=CoefficientVector(gamma),
        converged=bool(converged),
        iterations=IterationCounts(inner=int(inner_total), outer=int(outer)),
        final_objective=path[-1],
        lambdas_used=cfg,
        weights_used=weights,
        objective_path=path,
        step_floor_hits=int(floor_hits),
    )
