"""Selection and prediction metrics.

Selection rates use bitwise zero tests, matching the solvers' exact
sparsity.  The survival AUC is the cumulative/dynamic estimator built
from Kaplan-Meier survival curves: cases are subjects with an event by
the horizon, controls those event-free past it.  With no censoring it
collapses to the empirical ROC, i.e. pairwise concordance with ties
counted half.
"""
from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from .core import CoefficientMatrix, CoefficientVector, PredictorMatrix, SurvivalOutcome
from .errors import InvalidInputError

_log = logging.getLogger(__name__)


class SelectionRates(NamedTuple):
    tpr: float
    tnr: float


def support_vector(coefs) -> np.ndarray:
    """Zero/nonzero indicator; matrices collapse to per-feature rows."""
    if isinstance(coefs, (CoefficientMatrix, CoefficientVector)):
        coefs = coefs.values
    arr = np.asarray(coefs)
    if arr.ndim == 2:
        return (arr != 0.0).any(axis=1).astype(float)
    if arr.ndim != 1:
        raise InvalidInputError(f"cannot derive a support from shape {arr.shape}")
    return (arr != 0.0).astype(float)


def tpr_tnr(estimated, truth) -> SelectionRates:
    """True positive and true negative selection rates.

    A rate whose denominator is empty (truth all nonzero or all zero)
    is reported as NaN and logged rather than raising.
    """
    est = support_vector(estimated)
    tru = support_vector(truth)
    if est.shape != tru.shape:
        raise InvalidInputError(
            f"support lengths differ: {est.shape[0]} vs {tru.shape[0]}"
        )
    pos = tru != 0.0
    neg = ~pos
    if pos.any():
        tpr = float((est[pos] != 0.0).mean())
    else:
        _log.warning("TPR undefined: truth has no nonzero entries")
        tpr = float("nan")
    if neg.any():
        tnr = float((est[neg] == 0.0).mean())
    else:
        _log.warning("TNR undefined: truth has no zero entries")
        tnr = float("nan")
    return SelectionRates(tpr, tnr)


def prediction_error(model, X_test, z_test) -> float:
    """Held-out mean squared error of the linear outcome predictions."""
    if isinstance(model, CoefficientVector):
        model = model.values
    g = np.asarray(model, dtype=float)
    X = X_test.values if isinstance(X_test, PredictorMatrix) else np.asarray(X_test, dtype=float)
    z = np.asarray(getattr(z_test, "values", z_test), dtype=float)
    if X.shape[0] != z.shape[0] or X.shape[1] != g.shape[0]:
        raise InvalidInputError("prediction_error inputs disagree on dimensions")
    return float(np.mean((z - X @ g) ** 2))


def null_prediction_error(train_mean: float, z_test) -> float:
    """Error of the mean-only reference model on the same held-out data."""
    z = np.asarray(getattr(z_test, "values", z_test), dtype=float)
    return float(np.mean((z - train_mean) ** 2))


def rrpe(pe_null: float, pe_method: float) -> float:
    """Relative reduction in prediction error against the null model."""
    if not pe_null > 0:
        raise InvalidInputError("pe_null must be positive")
    return (pe_null - pe_method) / pe_null


def _km_at(time: np.ndarray, event: np.ndarray, t: float) -> float:
    """Kaplan-Meier survival estimate at t."""
    surv = 1.0
    for u in np.unique(time[(event == 1) & (time <= t)]):
        at_risk = int(np.sum(time >= u))
        deaths = int(np.sum((time == u) & (event == 1)))
        surv *= 1.0 - deaths / at_risk
    return surv


def survival_auc(risk, surv: SurvivalOutcome, t: float) -> float:
    """Cumulative/dynamic time-dependent AUC at horizon t.

    Sensitivity and specificity are estimated from Kaplan-Meier curves
    within the marker-above-cutoff subsets; the curve is traced over all
    observed cutoffs, clipped to [0,1], monotonized, and integrated by
    trapezoids.  No events by t, or nobody surviving past t, leaves the
    quantity undefined (NaN, logged).
    """
    risk = np.asarray(risk, dtype=float)
    if risk.shape[0] != surv.n:
        raise InvalidInputError("risk scores and outcome disagree on n")
    time = surv.time
    event = surv.event
    s_all = _km_at(time, event, t)
    if 1.0 - s_all <= 0.0:
        _log.warning("AUC undefined at t=%g: no events by the horizon", t)
        return float("nan")
    if s_all <= 0.0:
        _log.warning("AUC undefined at t=%g: no subjects survive past the horizon", t)
        return float("nan")

    cuts = np.unique(risk)[::-1]
    tprs = [0.0]
    fprs = [0.0]
    for c in cuts:
        above = risk > c
        frac = float(above.mean())
        if frac == 0.0:
            continue
        s_sub = _km_at(time[above], event[above], t)
        tprs.append((1.0 - s_sub) * frac / (1.0 - s_all))
        fprs.append(s_sub * frac / s_all)
    tprs.append(1.0)
    fprs.append(1.0)
    tp = np.maximum.accumulate(np.clip(np.asarray(tprs), 0.0, 1.0))
    fp = np.maximum.accumulate(np.clip(np.asarray(fprs), 0.0, 1.0))
    return float(np.clip(np.trapezoid(tp, fp), 0.0, 1.0))
