"""Cross-model penalty weights.

Each model's fitted coefficients are turned into penalty weights for the
other model: features with large estimated effects get small weights
(cheap to keep), features estimated near zero get large ones.  The
magnitude scale is log10 with a clamp, so weights stay within a bounded
dynamic range even when coefficients span many orders of magnitude.
"""
from __future__ import annotations

import numpy as np

from .core import CoefficientMatrix, CoefficientVector, GroupStructure, PenaltyWeights
from .errors import InvalidInputError

CLAMP_CEILING = -0.01
CLAMP_FLOOR = -2.0


def clamp_log(values, ceiling: float = CLAMP_CEILING, floor: float = CLAMP_FLOOR) -> np.ndarray:
    """Clamped log10 magnitude of coefficient values.

    Entries with magnitude >= 1 map to ``ceiling``; entries below
    10**floor (including exact zeros) map to ``floor``.  The result is
    always within [floor, ceiling], so downstream normalization cannot
    divide by zero or produce unbounded weights.
    """
    if not floor < ceiling < 0:
        raise InvalidInputError("clamp bounds must satisfy floor < ceiling < 0")
    arr = np.asarray(values, dtype=float)
    if not np.isfinite(arr).all():
        raise InvalidInputError("coefficient values must be finite")
    mag = np.abs(arr)
    with np.errstate(divide="ignore"):
        logs = np.log10(mag)
    out = np.where(logs >= 0.0, ceiling, logs)
    out = np.where(logs < floor, floor, out)
    return out


def unit_mean_weights(clamped: np.ndarray) -> np.ndarray:
    """Negate clamped log-magnitudes and scale the result to mean one."""
    arr = np.asarray(clamped, dtype=float)
    if arr.size == 0:
        raise InvalidInputError("cannot normalize an empty weight vector")
    if (arr >= 0).any():
        raise InvalidInputError("clamped log-magnitudes must be strictly negative")
    flipped = -arr
    return flipped / flipped.mean()


def group_norms(clamped: np.ndarray, groups: GroupStructure) -> np.ndarray:
    """Per-group L2 norms of clamped log-magnitudes, scaled to mean one."""
    arr = np.asarray(clamped, dtype=float)
    if groups.n_groups == 0:
        return np.zeros(0)
    groups.check_width(arr.shape[0])
    norms = np.array(
        [np.sqrt(np.sum(arr[list(members)] ** 2)) for _, members in groups.groups]
    )
    return norms / norms.mean()


def weights_from_gamma(
    gamma, groups: GroupStructure, ceiling: float = CLAMP_CEILING, floor: float = CLAMP_FLOOR
) -> PenaltyWeights:
    """Penalty weights for the imaging model from outcome-model coefficients."""
    if isinstance(gamma, CoefficientVector):
        gamma = gamma.values
    arr = np.asarray(gamma, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError("outcome coefficients must be a vector")
    clamped = clamp_log(arr, ceiling, floor)
    return PenaltyWeights(unit_mean_weights(clamped), group_norms(clamped, groups))


def weights_from_beta(
    beta, groups: GroupStructure, ceiling: float = CLAMP_CEILING, floor: float = CLAMP_FLOOR
) -> PenaltyWeights:
    """Penalty weights for the outcome model from imaging-model coefficients.

    Each feature is summarized by the largest coefficient magnitude in
    its row before the clamped-log transform.
    """
    if isinstance(beta, CoefficientMatrix):
        beta = beta.values
    arr = np.asarray(beta, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError("imaging coefficients must be a matrix")
    row_peaks = np.abs(arr).max(axis=1)
    clamped = clamp_log(row_peaks, ceiling, floor)
    return PenaltyWeights(unit_mean_weights(clamped), group_norms(clamped, groups))
