"""Data containers and shared preprocessing for the joint models.

Arrays handed to the containers are copied and frozen so that fitted
results cannot be mutated behind the solver's back.  Validation happens
at construction; downstream code can assume shapes and finiteness.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import AlignmentError, InvalidInputError

_MEAN_TOL = 1e-8
_SD_TOL = 1e-6
_CONSTANT_SD = 1e-12


def _frozen_array(values, dtype=float, ndim=None, name="array"):
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_names(names, count, what):
    names = tuple(str(s) for s in names)
    if len(names) != count:
        raise InvalidInputError(f"{what}: expected {count} names, got {len(names)}")
    if len(set(names)) != len(names):
        raise InvalidInputError(f"{what}: names are not unique")
    return names


@dataclass(frozen=True)
class PredictorMatrix:
    """n x p design matrix with named columns."""

    values: np.ndarray
    feature_names: tuple[str, ...]
    standardized: bool = False
    constant_columns: tuple[int, ...] = ()

    def __post_init__(self):
        arr = _frozen_array(self.values, ndim=2, name="predictor values")
        object.__setattr__(self, "values", arr)
        if arr.shape[0] < 2 or arr.shape[1] < 1:
            raise InvalidInputError(f"predictor matrix needs n >= 2 and p >= 1, got {arr.shape}")
        object.__setattr__(
            self, "feature_names", _check_names(self.feature_names, arr.shape[1], "feature_names")
        )
        object.__setattr__(self, "constant_columns", tuple(int(c) for c in self.constant_columns))
        if self.standardized:
            skip = set(self.constant_columns)
            cols = [j for j in range(arr.shape[1]) if j not in skip]
            if cols:
                sub = arr[:, cols]
                if np.abs(sub.mean(axis=0)).max() > _MEAN_TOL:
                    raise InvalidInputError("standardized predictor has a column mean off zero")
                if np.abs(sub.std(axis=0, ddof=1) - 1.0).max() > _SD_TOL:
                    raise InvalidInputError("standardized predictor has a column sd off one")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MultiResponse:
    """n x q response matrix (imaging phenotypes) with named columns."""

    values: np.ndarray
    response_names: tuple[str, ...]

    def __post_init__(self):
        arr = _frozen_array(self.values, ndim=2, name="response values")
        object.__setattr__(self, "values", arr)
        if arr.shape[1] < 1:
            raise InvalidInputError("response matrix needs q >= 1")
        object.__setattr__(
            self, "response_names", _check_names(self.response_names, arr.shape[1], "response_names")
        )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ContinuousOutcome:
    """Length-n continuous outcome vector."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, ndim=1, name="outcome"))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SurvivalOutcome:
    """Right-censored outcome: positive times plus 0/1 event indicators."""

    time: np.ndarray
    event: np.ndarray

    def __post_init__(self):
        time = _frozen_array(self.time, ndim=1, name="time")
        event = np.array(self.event, copy=True)
        if event.ndim != 1 or event.shape[0] != time.shape[0]:
            raise InvalidInputError("event must be a vector matching time")
        if not np.isin(event, (0, 1)).all():
            raise InvalidInputError("event indicators must be 0 or 1")
        event = event.astype(np.int64)
        event.setflags(write=False)
        if (time <= 0).any():
            raise InvalidInputError("survival times must be positive")
        if event.sum() == 0:
            raise InvalidInputError("survival outcome has no events; partial likelihood undefined")
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "event", event)

    @property
    def n(self) -> int:
        return self.time.shape[0]

    @property
    def n_events(self) -> int:
        return int(self.event.sum())


@dataclass(frozen=True)
class GroupStructure:
    """Named, possibly overlapping index sets over predictor columns."""

    groups: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self):
        cleaned = []
        names = set()
        for entry in self.groups:
            name, members = entry
            name = str(name)
            if name in names:
                raise InvalidInputError(f"duplicate group name {name!r}")
            names.add(name)
            members = tuple(sorted(int(j) for j in set(members)))
            if not members:
                raise InvalidInputError(f"group {name!r} has no members")
            if members[0] < 0:
                raise InvalidInputError(f"group {name!r} has a negative feature index")
            cleaned.append((name, members))
        object.__setattr__(self, "groups", tuple(cleaned))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.groups)

    @property
    def overlapping(self) -> bool:
        seen = set()
        for _, members in self.groups:
            for j in members:
                if j in seen:
                    return True
                seen.add(j)
        return False

    def max_index(self) -> int:
        return max((members[-1] for _, members in self.groups), default=-1)

    def check_width(self, p: int):
        if self.max_index() >= p:
            raise InvalidInputError(f"group index {self.max_index()} out of range for p={p}")


@dataclass(frozen=True)
class BlockGroupStructure:
    """Named sets of (feature, response) cells of a coefficient matrix.

    ``weight_keys`` optionally maps each block to the index of the
    predictor group whose cross-model weight scales the block penalty;
    -1 means the block carries unit weight.
    """

    blocks: tuple[tuple[str, tuple[tuple[int, int], ...]], ...]
    weight_keys: tuple[int, ...] = ()

    def __post_init__(self):
        cleaned = []
        names = set()
        for name, cells in self.blocks:
            name = str(name)
            if name in names:
                raise InvalidInputError(f"duplicate block name {name!r}")
            names.add(name)
            cells = tuple(sorted((int(j), int(k)) for j, k in set(cells)))
            if not cells:
                raise InvalidInputError(f"block {name!r} has no cells")
            if cells[0][0] < 0 or min(k for _, k in cells) < 0:
                raise InvalidInputError(f"block {name!r} has a negative index")
            cleaned.append((name, cells))
        object.__setattr__(self, "blocks", tuple(cleaned))
        keys = tuple(int(g) for g in self.weight_keys)
        if keys and len(keys) != len(cleaned):
            raise InvalidInputError("weight_keys length must match number of blocks")
        object.__setattr__(self, "weight_keys", keys)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.blocks)

    def check_shape(self, p: int, q: int):
        for name, cells in self.blocks:
            for j, k in cells:
                if j >= p or k >= q:
                    raise InvalidInputError(
                        f"block {name!r} cell ({j}, {k}) out of range for shape ({p}, {q})"
                    )


@dataclass(frozen=True)
class CoefficientMatrix:
    """p x q coefficient estimate for the multivariate model."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, ndim=2, name="coefficients"))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True)
class CoefficientVector:
    """Length-p coefficient estimate for the outcome model."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, ndim=1, name="coefficients"))

    @property
    def p(self) -> int:
        return self.values.shape[0]

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True)
class PenaltyWeights:
    """Cross-model penalty weights: one per feature, one per predictor group.

    Both vectors are strictly positive and average to one, so the overall
    penalty strength stays comparable across reweighting passes.
    """

    feature_weights: np.ndarray
    group_weights: np.ndarray

    def __post_init__(self):
        fw = _frozen_array(self.feature_weights, ndim=1, name="feature_weights")
        gw = _frozen_array(self.group_weights, ndim=1, name="group_weights")
        for label, vec in (("feature", fw), ("group", gw)):
            if vec.size == 0:
                continue
            if (vec <= 0).any():
                raise InvalidInputError(f"{label} weights must be strictly positive")
            if abs(vec.mean() - 1.0) > _MEAN_TOL:
                raise InvalidInputError(f"{label} weights must average to one")
        object.__setattr__(self, "feature_weights", fw)
        object.__setattr__(self, "group_weights", gw)

    @classmethod
    def unit(cls, p: int, n_groups: int) -> "PenaltyWeights":
        return cls(np.ones(p), np.ones(n_groups))


@dataclass(frozen=True)
class SolverConfig:
    """Penalty levels and iteration controls for one model fit."""

    lambda_feature: float = 0.0
    lambda_group: Union[float, tuple[float, ...]] = 0.0
    alpha: float = 1.0
    inner_tol: float = 1e-6
    outer_tol: float = 1e-4
    joint_tol: float = 1e-3
    max_inner_iter: int = 50
    max_outer_iter: int = 200
    max_joint_iter: int = 20
    step_init: float = 1.0
    step_shrink: float = 0.8

    def __post_init__(self):
        if self.lambda_feature < 0:
            raise InvalidInputError("lambda_feature must be nonnegative")
        lam_g = self.lambda_group
        if np.ndim(lam_g) == 0:
            if lam_g < 0:
                raise InvalidInputError("lambda_group must be nonnegative")
        else:
            lam_g = tuple(float(v) for v in lam_g)
            if any(v < 0 for v in lam_g):
                raise InvalidInputError("lambda_group entries must be nonnegative")
            object.__setattr__(self, "lambda_group", lam_g)
        if self.alpha < 0:
            raise InvalidInputError("alpha must be nonnegative")
        for name in ("inner_tol", "outer_tol", "joint_tol", "step_init"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if not 0.0 < self.step_shrink < 1.0:
            raise InvalidInputError("step_shrink must lie in (0, 1)")
        for name in ("max_inner_iter", "max_outer_iter", "max_joint_iter"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be at least 1")

    def group_lambdas(self, n_blocks: int) -> np.ndarray:
        """Expand ``lambda_group`` to one value per block/group."""
        lam = self.lambda_group
        if np.ndim(lam) == 0:
            return np.full(n_blocks, float(lam))
        lam = np.asarray(lam, dtype=float)
        if lam.shape[0] != n_blocks:
            raise InvalidInputError(
                f"lambda_group has {lam.shape[0]} entries but there are {n_blocks} groups"
            )
        return lam.copy()


@dataclass(frozen=True)
class IterationCounts:
    inner: int = 0
    outer: int = 0
    joint: int = 0


@dataclass(frozen=True)
class FitResult:
    """Outcome of a single model fit."""

    coefficients: Union[CoefficientMatrix, CoefficientVector]
    converged: bool
    iterations: IterationCounts
    final_objective: float
    lambdas_used: SolverConfig
    weights_used: PenaltyWeights
    objective_path: tuple[float, ...] = ()
    step_floor_hits: int = 0


class AlignmentResult(NamedTuple):
    names: tuple[str, ...]
    first_indices: np.ndarray
    second_indices: np.ndarray
    first: PredictorMatrix
    second: PredictorMatrix


def standardize(m):
    """Center columns and scale by sample sd (ddof=1).

    Returns ``(standardized, means, scales)``.  Columns with essentially
    zero spread are centered only, get scale 1.0, and are flagged on the
    result so later consumers can skip them.  Applying the map twice is
    a no-op up to rounding.
    """
    if isinstance(m, PredictorMatrix):
        values, names, kind = m.values, m.feature_names, "predictor"
    elif isinstance(m, MultiResponse):
        values, names, kind = m.values, m.response_names, "response"
    else:
        raise InvalidInputError(f"cannot standardize object of type {type(m).__name__}")
    means = values.mean(axis=0)
    sds = values.std(axis=0, ddof=1)
    constant = sds <= _CONSTANT_SD * np.maximum(1.0, np.abs(means))
    scales = np.where(constant, 1.0, sds)
    out = (values - means) / scales
    if kind == "predictor":
        result = PredictorMatrix(
            out, names, standardized=True, constant_columns=tuple(np.flatnonzero(constant))
        )
    else:
        result = MultiResponse(out, names)
    return result, means, scales


def align_features(a: PredictorMatrix, b: PredictorMatrix) -> AlignmentResult:
    """Reduce two predictor matrices to their shared features, name-sorted.

    The returned index arrays map aligned positions back into each input,
    which is how group definitions and weights get transported.
    """
    shared = sorted(set(a.feature_names) & set(b.feature_names))
    if not shared:
        raise AlignmentError(
            "no shared feature names between predictors "
            f"(first has {a.feature_names[:3]}..., second has {b.feature_names[:3]}...)"
        )
    a_pos = {name: j for j, name in enumerate(a.feature_names)}
    b_pos = {name: j for j, name in enumerate(b.feature_names)}
    a_idx = np.array([a_pos[name] for name in shared], dtype=np.int64)
    b_idx = np.array([b_pos[name] for name in shared], dtype=np.int64)

    def _take(m: PredictorMatrix, idx):
        keep = set(idx.tolist())
        remap = {old: new for new, old in enumerate(idx.tolist())}
        consts = tuple(remap[c] for c in m.constant_columns if c in keep)
        return PredictorMatrix(
            m.values[:, idx], tuple(shared), standardized=m.standardized, constant_columns=consts
        )

    return AlignmentResult(tuple(shared), a_idx, b_idx, _take(a, a_idx), _take(b, b_idx))


def cross_block_groups(x_groups: GroupStructure, y_groups: GroupStructure) -> BlockGroupStructure:
    """Cross every predictor group with every response group.

    Each block covers the cells {(j, k): j in the x-group, k in the
    y-group} and inherits the x-group's index as its weight key, since
    block penalties are scaled by the predictor-side weight.
    """
    if x_groups.n_groups == 0 or y_groups.n_groups == 0:
        raise InvalidInputError("cross_block_groups needs at least one group on each axis")
    blocks = []
    keys = []
    for gi, (xname, xmembers) in enumerate(x_groups.groups):
        for yname, ymembers in y_groups.groups:
            cells = tuple((j, k) for j in xmembers for k in ymembers)
            blocks.append((f"{xname}:{yname}", cells))
            keys.append(gi)
    return BlockGroupStructure(tuple(blocks), tuple(keys))


def groups_as_blocks(groups: GroupStructure) -> BlockGroupStructure:
    """View feature groups as single-column blocks over a p x 1 coefficient matrix."""
    blocks = tuple(
        (name, tuple((j, 0) for j in members)) for name, members in groups.groups
    )
    keys = tuple(range(groups.n_groups))
    if not blocks:
        return BlockGroupStructure((), ())
    return BlockGroupStructure(blocks, keys)
