"""Penalized objectives, the soft-threshold prox, and stationarity checks.

The stationarity residuals here are the ground truth the solvers are
tested against: a converged fit must satisfy the coordinate fixed-point
equations for nonzero entries and the block-norm inequality for blocks
estimated at zero.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .core import (
    BlockGroupStructure,
    ContinuousOutcome,
    GroupStructure,
    PenaltyWeights,
    SolverConfig,
    SurvivalOutcome,
    groups_as_blocks,
)
from .errors import InvalidInputError


def soft_threshold(values, threshold: float):
    """Shrink toward zero by ``threshold``; magnitudes at or below it give exact 0."""
    if threshold < 0:
        raise InvalidInputError("threshold must be nonnegative")
    arr = np.asarray(values, dtype=float)
    mag = np.abs(arr) - threshold
    out = np.where(mag > 0.0, np.sign(arr) * mag, 0.0)
    if np.isscalar(values) or arr.ndim == 0:
        return float(out)
    return out


def effective_penalties(p, structure, weights: PenaltyWeights, cfg: SolverConfig):
    """Per-feature and per-block penalty levels with weights raised to alpha.

    Blocks map to predictor-group weights through their weight keys; a
    key of -1 (or an empty key list) means unit weight.  With alpha = 0
    every weight factor collapses to exactly 1.0.
    """
    fw = weights.feature_weights
    if fw.shape[0] != p:
        raise InvalidInputError(f"feature weights have length {fw.shape[0]}, expected {p}")
    lam_feat = cfg.lambda_feature * fw**cfg.alpha

    if isinstance(structure, GroupStructure):
        structure = groups_as_blocks(structure)
    n_blocks = structure.n_blocks
    lam_block = cfg.group_lambdas(n_blocks)
    if n_blocks:
        keys = structure.weight_keys or tuple([-1] * n_blocks)
        gw = weights.group_weights
        factors = np.ones(n_blocks)
        for g, key in enumerate(keys):
            if key >= 0:
                if key >= gw.shape[0]:
                    raise InvalidInputError(
                        f"block weight key {key} out of range for {gw.shape[0]} group weights"
                    )
                factors[g] = gw[key] ** cfg.alpha
        lam_block = lam_block * factors
    return lam_feat, lam_block


def _block_norms(B: np.ndarray, blocks: BlockGroupStructure) -> np.ndarray:
    norms = np.empty(blocks.n_blocks)
    for g, (_, cells) in enumerate(blocks.blocks):
        rows = [j for j, _ in cells]
        cols = [k for _, k in cells]
        norms[g] = np.sqrt(np.sum(B[rows, cols] ** 2))
    return norms


def objective_model1(X, Y, B, blocks: BlockGroupStructure, weights, cfg: SolverConfig) -> float:
    """Penalized least-squares objective of the multivariate imaging model."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    B = np.asarray(B, dtype=float)
    n = X.shape[0]
    lam_feat, lam_block = effective_penalties(X.shape[1], blocks, weights, cfg)
    resid = Y - X @ B
    quad = 0.5 / n * np.sum(resid**2)
    l1 = np.sum(lam_feat[:, None] * np.abs(B))
    group = float(np.dot(lam_block, _block_norms(B, blocks))) if blocks.n_blocks else 0.0
    return float(quad + l1 + group)


def objective_model2_linear(X, z, coefs, groups: GroupStructure, weights, cfg: SolverConfig) -> float:
    """Penalized least-squares objective of the continuous outcome model."""
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float)
    g = np.asarray(coefs, dtype=float)
    n = X.shape[0]
    lam_feat, lam_block = effective_penalties(X.shape[1], groups, weights, cfg)
    quad = 0.5 / n * np.sum((z - X @ g) ** 2)
    l1 = float(np.dot(lam_feat, np.abs(g)))
    group = 0.0
    for gi, (_, members) in enumerate(groups.groups):
        group += lam_block[gi] * np.sqrt(np.sum(g[list(members)] ** 2))
    return float(quad + l1 + group)


def cox_partial_loss(X, time, event, coefs) -> float:
    """Averaged negative log partial likelihood with Breslow handling of ties."""
    X = np.asarray(X, dtype=float)
    time = np.asarray(time, dtype=float)
    event = np.asarray(event)
    eta = X @ np.asarray(coefs, dtype=float)
    n = X.shape[0]
    total = 0.0
    for i in np.flatnonzero(event == 1):
        risk = time >= time[i]
        total += logsumexp(eta[risk]) - eta[i]
    return float(total / n)


def cox_partial_gradient(X, time, event, coefs) -> np.ndarray:
    """Gradient of :func:`cox_partial_loss` in the coefficients."""
    X = np.asarray(X, dtype=float)
    time = np.asarray(time, dtype=float)
    event = np.asarray(event)
    eta = X @ np.asarray(coefs, dtype=float)
    n = X.shape[0]
    grad = np.zeros(X.shape[1])
    for i in np.flatnonzero(event == 1):
        risk = time >= time[i]
        w = np.exp(eta[risk] - eta[risk].max())
        grad += (w @ X[risk]) / w.sum() - X[i]
    return grad / n


def objective_model2_cox(
    X, outcome: SurvivalOutcome, coefs, groups: GroupStructure, weights, cfg: SolverConfig
) -> float:
    """Penalized Cox objective of the survival outcome model."""
    g = np.asarray(coefs, dtype=float)
    lam_feat, lam_block = effective_penalties(np.asarray(X).shape[1], groups, weights, cfg)
    loss = cox_partial_loss(X, outcome.time, outcome.event, g)
    l1 = float(np.dot(lam_feat, np.abs(g)))
    group = 0.0
    for gi, (_, members) in enumerate(groups.groups):
        group += lam_block[gi] * np.sqrt(np.sum(g[list(members)] ** 2))
    return float(loss + l1 + group)


def kkt_residual_model1(X, Y, B, blocks: BlockGroupStructure, weights, cfg: SolverConfig) -> float:
    """Largest violation of the imaging model's stationarity conditions.

    Blocks whose coefficients are all zero are tested with the block-norm
    inequality; every other cell is tested against its coordinate
    fixed-point equation, whose denominator only involves norms of
    nonzero blocks and is therefore well defined.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    B = np.asarray(B, dtype=float)
    n, p = X.shape
    q = Y.shape[1]
    lam_feat, lam_block = effective_penalties(p, blocks, weights, cfg)
    colnorm2 = np.sum(X**2, axis=0)
    S = X.T @ (Y - X @ B) + colnorm2[:, None] * B
    norms = _block_norms(B, blocks)

    worst = 0.0
    in_zero_block = np.zeros((p, q), dtype=bool)
    denom_extra = np.zeros((p, q))
    for g, (_, cells) in enumerate(blocks.blocks):
        rows = [j for j, _ in cells]
        cols = [k for _, k in cells]
        if norms[g] == 0.0:
            slack = np.maximum(np.abs(S[rows, cols]) / n - lam_feat[rows], 0.0)
            worst = max(worst, float(np.sqrt(np.sum(slack**2)) - lam_block[g]))
            in_zero_block[rows, cols] = True
        else:
            denom_extra[rows, cols] += lam_block[g] / norms[g]

    denom = colnorm2[:, None] + n * denom_extra
    rhs = np.sign(S) * np.maximum(np.abs(S) - n * lam_feat[:, None], 0.0) / denom
    gap = np.abs(B - rhs)
    gap[in_zero_block] = 0.0
    worst = max(worst, float(gap.max()) if gap.size else 0.0)
    return max(worst, 0.0)


def kkt_residual_model2(X, outcome, coefs, groups: GroupStructure, weights, cfg: SolverConfig) -> float:
    """Largest stationarity violation of the outcome model.

    The continuous case mirrors the imaging-model fixed point on a
    single response column.  The survival case tests the thresholded
    gradient conditions of the penalized partial likelihood.
    """
    g = np.asarray(coefs, dtype=float)
    X = np.asarray(X, dtype=float)
    if isinstance(outcome, ContinuousOutcome):
        outcome = outcome.values
    if not isinstance(outcome, SurvivalOutcome):
        z = np.asarray(outcome, dtype=float)
        if z.ndim != 1:
            raise InvalidInputError(f"unsupported outcome of shape {z.shape}")
        return kkt_residual_model1(
            X, z[:, None], g[:, None], groups_as_blocks(groups), weights, cfg
        )

    p = X.shape[1]
    lam_feat, lam_block = effective_penalties(p, groups, weights, cfg)
    grad = cox_partial_gradient(X, outcome.time, outcome.event, g)
    worst = 0.0
    in_zero_group = np.zeros(p, dtype=bool)
    smooth_term = np.zeros(p)
    for gi, (_, members) in enumerate(groups.groups):
        members = list(members)
        norm = np.sqrt(np.sum(g[members] ** 2))
        if norm == 0.0:
            slack = np.maximum(np.abs(grad[members]) - lam_feat[members], 0.0)
            worst = max(worst, float(np.sqrt(np.sum(slack**2)) - lam_block[gi]))
            in_zero_group[members] = True
        else:
            smooth_term[members] += lam_block[gi] * g[members] / norm

    for j in range(p):
        if in_zero_group[j]:
            continue
        if g[j] == 0.0:
            worst = max(worst, abs(grad[j]) - lam_feat[j])
        else:
            worst = max(worst, abs(grad[j] + lam_feat[j] * np.sign(g[j]) + smooth_term[j]))
    return max(worst, 0.0)
