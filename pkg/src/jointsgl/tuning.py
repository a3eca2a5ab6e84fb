"""Cross-validated grid search over the two penalty levels.

One grid serves both models; the error criterion is held-out residual
sum of squares for linear responses and held-out partial-likelihood
deviance for survival.  Fits that fail mark their cell with infinity so
a single bad corner cannot abort the search.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ContinuousOutcome,
    MultiResponse,
    PenaltyWeights,
    PredictorMatrix,
    SolverConfig,
    SurvivalOutcome,
)
from .cox_solver import fit_model2_cox
from .errors import InvalidInputError, SolverError
from .linear_solver import fit_model1, fit_model2_linear
from .prox import cox_partial_gradient, cox_partial_loss

_log = logging.getLogger(__name__)

GROUP_RATIOS = (0.0, 0.5, 1.0)
_LAMBDA_MAX_PAD = 1e-9


@dataclass(frozen=True)
class CvCell:
    lambda_feature: float
    lambda_group: float
    fold_errors: tuple[float, ...]
    mean_error: float


def make_folds(n: int, k: int, seed: int, event=None) -> list[np.ndarray]:
    """Seeded partition into k folds of near-equal size.

    With event indicators, events and censored subjects are shuffled
    separately and dealt round-robin so every fold carries events
    whenever enough exist; fewer events than folds logs a warning and
    falls back to the unstratified deal.
    """
    if not 2 <= k <= n:
        raise InvalidInputError(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    if event is not None:
        event = np.asarray(event)
        if event.shape[0] != n:
            raise InvalidInputError("event indicators must have length n")
        n_events = int((event == 1).sum())
        if n_events < k:
            _log.warning("only %d event(s) across %d folds; stratification disabled",
                         n_events, k)
            event = None
    if event is None:
        order = rng.permutation(n)
    else:
        ev = rng.permutation(np.flatnonzero(event == 1))
        cens = rng.permutation(np.flatnonzero(event == 0))
        order = np.concatenate([ev, cens])
    folds = [np.sort(order[r::k]) for r in range(k)]
    return folds


def _score_linear(Xt, Yt, coefs) -> float:
    resid = Yt - Xt @ coefs
    return float(np.sum(resid**2))


def _concordance_error(risk, time, event) -> float:
    """One minus Harrell's C over the comparable pairs; 0.5 when none."""
    concordant = 0.0
    total = 0
    for i in np.flatnonzero(event == 1):
        later = time > time[i]
        total += int(later.sum())
        concordant += float((risk[i] > risk[later]).sum())
        concordant += 0.5 * float((risk[i] == risk[later]).sum())
    if total == 0:
        return 0.5
    return 1.0 - concordant / total


def _fit_and_score(X, response, structure, weights, cfg, train, test, survival_score):
    """Held-out error of one fold fit.

    Linear models score by residual sum of squares on the held-out rows.
    The default survival score is the held-out partial-likelihood
    deviance, computed as full-data minus training log partial likelihood
    at the training coefficients: the partial likelihood does not
    decompose over subjects, so scoring a small fold on its own risk sets
    would discard most of the ordering information.  "concordance"
    instead scores one minus Harrell's C on the held-out fold.
    """
    Xtr, Xte = X[train], X[test]
    if isinstance(response, MultiResponse):
        fit = fit_model1(Xtr, response.values[train], structure, weights, cfg)
        return _score_linear(Xte, response.values[test], fit.coefficients.values)
    if isinstance(response, SurvivalOutcome):
        fit = fit_model2_cox(
            Xtr, SurvivalOutcome(response.time[train], response.event[train]),
            structure, weights, cfg,
        )
        coefs = fit.coefficients.values
        if survival_score == "concordance":
            return _concordance_error(Xte @ coefs, response.time[test], response.event[test])
        full = X.shape[0] * cox_partial_loss(X, response.time, response.event, coefs)
        tr = train.shape[0] * cox_partial_loss(
            X[train], response.time[train], response.event[train], coefs
        )
        return float(2.0 * (full - tr))
    z = response.values if isinstance(response, ContinuousOutcome) else np.asarray(response)
    fit = fit_model2_linear(Xtr, z[train], structure, weights, cfg)
    return _score_linear(Xte, z[test], fit.coefficients.values)


def cv_grid_search(X, response, structure, weights: PenaltyWeights,
                   grid, k: int = 5, seed: int = 0,
                   cfg: SolverConfig = SolverConfig(),
                   survival_score: str = "deviance") -> tuple[tuple[float, float], tuple[CvCell, ...]]:
    """Exhaustive k-fold search over (lambda_feature, lambda_group) pairs.

    Returns the winning pair and the full error table.  Ties prefer the
    sparser model: larger lambda_feature, then larger lambda_group.
    """
    grid = [(float(a), float(b)) for a, b in grid]
    if not grid:
        raise InvalidInputError("empty penalty grid")
    if survival_score not in ("deviance", "concordance"):
        raise InvalidInputError(f"unknown survival score {survival_score!r}")
    Xa = X.values if isinstance(X, PredictorMatrix) else np.asarray(X, dtype=float)
    n = Xa.shape[0]
    event = response.event if isinstance(response, SurvivalOutcome) else None
    folds = make_folds(n, k, seed, event=event)
    all_idx = np.arange(n)

    cells = []
    for lam_f, lam_g in grid:
        point_cfg = replace(cfg, lambda_feature=lam_f, lambda_group=lam_g)
        errors = []
        for fold in folds:
            train = np.setdiff1d(all_idx, fold, assume_unique=True)
            try:
                errors.append(
                    _fit_and_score(Xa, response, structure, weights, point_cfg,
                                   train, fold, survival_score)
                )
            except SolverError as exc:
                _log.warning("grid point (%.4g, %.4g) failed on a fold: %s",
                             lam_f, lam_g, exc)
                errors.append(float("inf"))
        cells.append(CvCell(lam_f, lam_g, tuple(errors), float(np.mean(errors))))

    best = min(cells, key=lambda c: (c.mean_error, -c.lambda_feature, -c.lambda_group))
    return (best.lambda_feature, best.lambda_group), tuple(cells)


def lambda_max(X, response, weights: PenaltyWeights, cfg: SolverConfig) -> float:
    """Smallest feature penalty that zeroes every coefficient at the start.

    The bound comes from the stationarity threshold at zero per feature,
    including that feature's weight; a hair of padding keeps the
    all-zero property under floating-point equality.
    """
    Xa = X.values if isinstance(X, PredictorMatrix) else np.asarray(X, dtype=float)
    n, p = Xa.shape
    w_alpha = weights.feature_weights**cfg.alpha
    if isinstance(response, SurvivalOutcome):
        g0 = cox_partial_gradient(Xa, response.time, response.event, np.zeros(p))
        per_feature = np.abs(g0) / w_alpha
    else:
        resp = getattr(response, "values", response)
        resp = np.asarray(resp, dtype=float)
        if resp.ndim == 1:
            resp = resp[:, None]
        per_feature = np.max(np.abs(Xa.T @ resp), axis=1) / (n * w_alpha)
    value = float(per_feature.max())
    if value <= 0.0:
        raise InvalidInputError("response is identically zero; no meaningful penalty scale")
    return value * (1.0 + _LAMBDA_MAX_PAD)


def default_grid(X, response, groups, weights: PenaltyWeights,
                 size: int = 5, cfg: SolverConfig = SolverConfig()) -> list[tuple[float, float]]:
    """Log-spaced feature penalties from lambda_max down two decades,
    crossed with group penalties at fixed ratios of each feature value."""
    if size < 1:
        raise InvalidInputError("grid size must be at least 1")
    top = lambda_max(X, response, weights, cfg)
    if size == 1:
        feats = np.array([top])
    else:
        feats = np.geomspace(top, top / 100.0, size)
    return [(float(lf), float(r * lf)) for lf in feats for r in GROUP_RATIOS]
