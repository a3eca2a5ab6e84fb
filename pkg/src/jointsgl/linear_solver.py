"""Accelerated coordinate descent for the penalized linear models.

The public helpers (partial residual, coordinate update, backtracking,
momentum center, group sweep) expose the algorithm's building blocks for
inspection and testing; the fitting entry points delegate the hot loop
to the compiled kernels in :mod:`jointsgl._kernels`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
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
    groups_as_blocks,
)
from .errors import InvalidInputError, SolverError
from .prox import effective_penalties, soft_threshold

_log = logging.getLogger(__name__)

STEP_FLOOR = _kernels.STEP_FLOOR


@dataclass
class CoordinateState:
    """State of one coordinate's inner accelerated loop."""

    beta_center: float
    theta: float
    step: float
    inner_count: int = 1

    def __post_init__(self):
        if self.step <= 0:
            raise InvalidInputError("step must be positive")
        if self.inner_count < 1:
            raise InvalidInputError("inner_count starts at 1")


def _design(X) -> np.ndarray:
    if isinstance(X, PredictorMatrix):
        return X.values
    return np.asarray(X, dtype=float)


def _responses(Y) -> np.ndarray:
    if isinstance(Y, MultiResponse):
        return Y.values
    return np.asarray(Y, dtype=float)


def _coef_array(c) -> np.ndarray:
    if isinstance(c, (CoefficientMatrix, CoefficientVector)):
        return c.values
    return np.asarray(c, dtype=float)


def partial_residual(X, Y, B, j: int, k: int) -> np.ndarray:
    """Response column k minus every predictor's contribution except column j."""
    Xa = _design(X)
    Ya = _responses(Y)
    Ba = _coef_array(B)
    if Ya.ndim == 1:
        Ya = Ya[:, None]
    if Ba.ndim == 1:
        Ba = Ba[:, None]
    p, q = Ba.shape
    if not (0 <= j < p and 0 <= k < q):
        raise InvalidInputError(f"coordinate ({j}, {k}) out of range for shape ({p}, {q})")
    return Ya[:, k] - Xa @ Ba[:, k] + Xa[:, j] * Ba[j, k]


def coordinate_gradient(r: np.ndarray, x_j: np.ndarray, beta: float) -> float:
    """Gradient of the scaled quadratic loss in one coordinate at value beta."""
    r = np.asarray(r, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    n = r.shape[0]
    return float(-x_j @ (r - x_j * beta) / n)


def coordinate_update(
    state: CoordinateState, grad: float, j: int, k: int, blocks, weights: PenaltyWeights,
    cfg: SolverConfig,
) -> float:
    """Proximal step for one coefficient: soft threshold, then shrink by the
    combined penalty of every block containing the cell.

    A zero soft-threshold value short-circuits to exactly 0.
    """
    if isinstance(blocks, GroupStructure):
        blocks = groups_as_blocks(blocks)
    p = weights.feature_weights.shape[0]
    lam_feat, lam_block = effective_penalties(p, blocks, weights, cfg)
    t = state.step
    s = soft_threshold(state.beta_center - t * grad, t * lam_feat[j])
    if s == 0.0:
        return 0.0
    total = 0.0
    for g, (_, cells) in enumerate(blocks.blocks):
        if (j, k) in cells:
            total += lam_block[g]
    mult = 1.0 - t * total / abs(s)
    return mult * s if mult > 0.0 else 0.0


def backtrack_step(state: CoordinateState, loss, grad: float, candidate=None,
                   shrink: float = 0.8) -> float:
    """Shrink the step until the quadratic majorization bound holds.

    ``loss`` evaluates the smooth part at a point; ``candidate`` maps a
    step size to the proximal trial point (plain gradient step when
    omitted).  Underflow below the floor is logged and the floor used.
    """
    beta0 = state.beta_center
    base = loss(beta0)
    t = state.step
    if candidate is None:
        candidate = lambda step: beta0 - step * grad
    while True:
        u = candidate(t)
        delta = u - beta0
        bound = base + grad * delta + 0.5 * delta * delta / t
        if loss(u) <= bound + _kernels.BT_SLACK * (1.0 + abs(base)):
            return t
        t_next = t * shrink
        if t_next < STEP_FLOOR:
            _log.warning("backtracking underflow; clamping step to %.1e", STEP_FLOOR)
            return STEP_FLOOR
        t = t_next


def nesterov_center(theta_new: float, theta_old: float, l: int) -> float:
    """Momentum extrapolation used to recenter the inner loop."""
    return theta_new + (l / (l + 3.0)) * (theta_new - theta_old)


def group_zero_sweep(B, X, Y, blocks: BlockGroupStructure, weights: PenaltyWeights,
                     cfg: SolverConfig, t: float) -> np.ndarray:
    """Zero every block whose soft-thresholded gradient step fits under the
    block threshold; returns a new coefficient array.

    All block conditions are evaluated against the same gradient step, so
    the outcome does not depend on block order.
    """
    Xa = _design(X)
    Ya = _responses(Y)
    Ba = np.array(_coef_array(B), dtype=float)
    if Ya.ndim == 1:
        Ya = Ya[:, None]
    if Ba.ndim == 1:
        Ba = Ba[:, None]
    n, p = Xa.shape
    lam_feat, lam_block = effective_penalties(p, blocks, weights, cfg)
    G = -Xa.T @ (Ya - Xa @ Ba) / n
    V = np.empty_like(Ba)
    for j in range(p):
        V[j] = soft_threshold(Ba[j] - t * G[j], t * lam_feat[j])
    kill = np.zeros_like(Ba, dtype=bool)
    for g, (_, cells) in enumerate(blocks.blocks):
        rows = [j for j, _ in cells]
        cols = [k for _, k in cells]
        if np.sqrt(np.sum(V[rows, cols] ** 2)) <= t * lam_block[g]:
            kill[rows, cols] = True
    Ba[kill] = 0.0
    return Ba


def _cell_maps(blocks: BlockGroupStructure, p: int, q: int):
    """CSR-style cell/block membership maps with cells flattened row-major."""
    G = blocks.n_blocks
    blk_cell_indptr = np.zeros(G + 1, dtype=np.int64)
    flat_cells: list[int] = []
    per_cell: dict[int, list[int]] = {}
    for g, (_, cells) in enumerate(blocks.blocks):
        blk_cell_indptr[g + 1] = blk_cell_indptr[g] + len(cells)
        for j, k in cells:
            c = j * q + k
            flat_cells.append(c)
            per_cell.setdefault(c, []).append(g)
    blk_cells = np.asarray(flat_cells, dtype=np.int64)
    cell_blk_indptr = np.zeros(p * q + 1, dtype=np.int64)
    ids: list[int] = []
    for c in range(p * q):
        members = per_cell.get(c, ())
        cell_blk_indptr[c + 1] = cell_blk_indptr[c] + len(members)
        ids.extend(members)
    cell_blk_ids = np.asarray(ids, dtype=np.int64)
    return cell_blk_indptr, cell_blk_ids, blk_cell_indptr, blk_cells


def _check_weights(weights: PenaltyWeights, p: int, blocks: BlockGroupStructure):
    if weights.feature_weights.shape[0] != p:
        raise InvalidInputError(
            f"feature weights length {weights.feature_weights.shape[0]} does not match p={p}"
        )
    keys = blocks.weight_keys or ()
    if keys and max(keys) >= weights.group_weights.shape[0]:
        raise InvalidInputError("block weight key exceeds group weight count")


def _run_linear_kernel(Xa, Ya, blocks, weights, cfg, revive):
    n, p = Xa.shape
    q = Ya.shape[1]
    blocks.check_shape(p, q)
    _check_weights(weights, p, blocks)
    lam_feat, lam_block = effective_penalties(p, blocks, weights, cfg)
    maps = _cell_maps(blocks, p, q)
    XT = np.ascontiguousarray(Xa.T, dtype=np.float64)
    YT = np.ascontiguousarray(Ya.T, dtype=np.float64)
    B = np.zeros((p, q))
    status, err_j, err_k, outer, converged, inner_total, floor_hits, objectives, _ = (
        _kernels.linear_fit(
            XT, YT, B, *maps,
            np.ascontiguousarray(lam_feat, dtype=np.float64),
            np.ascontiguousarray(lam_block, dtype=np.float64),
            cfg.inner_tol, cfg.max_inner_iter, cfg.outer_tol, cfg.max_outer_iter,
            cfg.step_init, cfg.step_shrink, revive,
        )
    )
    if status != 0:
        where = f" at coordinate ({err_j}, {err_k})" if err_j >= 0 else ""
        raise SolverError(f"linear solver produced a non-finite update{where}")
    if floor_hits:
        _log.warning("backtracking hit the step floor %d time(s)", floor_hits)
    if not converged:
        _log.warning("linear fit stopped at max_outer_iter=%d without reaching outer_tol",
                     cfg.max_outer_iter)
    path = tuple(float(v) for v in objectives[:outer])
    counts = IterationCounts(inner=int(inner_total), outer=int(outer))
    return B, bool(converged), counts, path, int(floor_hits)


def fit_model1(X, Y, blocks: BlockGroupStructure, weights: PenaltyWeights,
               cfg: SolverConfig, revive: bool = True) -> FitResult:
    """Fit the multivariate imaging model by accelerated coordinate descent."""
    Xa = _design(X)
    Ya = _responses(Y)
    if Ya.ndim != 2:
        raise InvalidInputError("model 1 needs a 2-d response matrix")
    if Ya.shape[0] != Xa.shape[0]:
        raise InvalidInputError(
            f"predictors have {Xa.shape[0]} rows but responses have {Ya.shape[0]}"
        )
    B, converged, counts, path, floor_hits = _run_linear_kernel(
        Xa, Ya, blocks, weights, cfg, revive
    )
    return FitResult(
        coefficients=CoefficientMatrix(B),
        converged=converged,
        iterations=counts,
        final_objective=path[-1],
        lambdas_used=cfg,
        weights_used=weights,
        objective_path=path,
        step_floor_hits=floor_hits,
    )


def fit_model2_linear(X, z, groups: GroupStructure, weights: PenaltyWeights,
                      cfg: SolverConfig, revive: bool = True) -> FitResult:
    """Fit the continuous outcome model; the single-response case of the same solver."""
    Xa = _design(X)
    if isinstance(z, ContinuousOutcome):
        za = z.values
    else:
        za = np.asarray(z, dtype=float)
    if za.ndim != 1:
        raise InvalidInputError("model 2 outcome must be a vector")
    if za.shape[0] != Xa.shape[0]:
        raise InvalidInputError(
            f"predictors have {Xa.shape[0]} rows but outcome has {za.shape[0]}"
        )
    groups.check_width(Xa.shape[1])
    blocks = groups_as_blocks(groups)
    B, converged, counts, path, floor_hits = _run_linear_kernel(
        Xa, za[:, None], blocks, weights, cfg, revive
    )
    return FitResult(
        coefficients=CoefficientVector(B[:, 0]),
        converged=converged,
        iterations=counts,
        final_objective=path[-1],
        lambdas_used=cfg,
        weights_used=weights,
        objective_path=path,
        step_floor_hits=floor_hits,
    )
