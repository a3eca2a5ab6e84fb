"""Synthetic data generators for the simulation studies.

Predictors are drawn blockwise from an AR(1) covariance inside each
feature group and independently across groups.  The two models share
one predictor matrix; supports overlap by a configurable fraction.
Survival times are exponential with a log-linear hazard, and censoring
times are exponential with a rate calibrated so the expected censoring
fraction matches the target.

All randomness flows through named substreams spawned from the scenario
seed, so regenerating any piece (or a test set) never perturbs the rest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Union

import numpy as np
from scipy.optimize import brentq

from .core import (
    CoefficientMatrix,
    CoefficientVector,
    ContinuousOutcome,
    GroupStructure,
    MultiResponse,
    PredictorMatrix,
    SurvivalOutcome,
)
from .errors import CalibrationError, InvalidInputError

_STREAMS = ("truth", "x", "noise_y", "noise_z", "censor", "x_test", "noise_test", "censor_test")


@dataclass(frozen=True)
class SimulationScenario:
    """Knobs of one synthetic design; presets fill the paper-style cases."""

    n: int
    effect_size: float
    overlap_fraction: float
    outcome_kind: str = "continuous"
    p: int = 200
    q: int = 120
    x_group_count: int = 20
    y_group_count: int = 4
    n_important: int = 20
    censor_target: float = 0.20
    within_block_correlation: float = 0.5
    noise_sd: float = 1.0
    baseline_hazard: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.overlap_fraction <= 1.0:
            raise InvalidInputError("overlap_fraction must lie in (0, 1]")
        if not 0.0 <= self.censor_target < 1.0:
            raise InvalidInputError("censor_target must lie in [0, 1)")
        if self.outcome_kind not in ("continuous", "survival"):
            raise InvalidInputError(f"unknown outcome kind {self.outcome_kind!r}")
        if not 0 < self.n_important <= self.p:
            raise InvalidInputError("n_important must lie in 1..p")
        if self.x_group_count > self.p or self.y_group_count > self.q:
            raise InvalidInputError("more groups than features/responses")
        if not -1.0 < self.within_block_correlation < 1.0:
            raise InvalidInputError("within_block_correlation must lie in (-1, 1)")
        if self.n < 2 or self.noise_sd < 0 or self.baseline_hazard <= 0:
            raise InvalidInputError("invalid scenario sizes")

    @property
    def survival(self) -> bool:
        return self.outcome_kind == "survival"


@dataclass(frozen=True)
class GroundTruth:
    B_true: CoefficientMatrix
    G_true: CoefficientVector
    important_model1: tuple[int, ...]
    important_model2: tuple[int, ...]


class Dataset1(NamedTuple):
    predictors: PredictorMatrix
    responses: MultiResponse


class Dataset2(NamedTuple):
    predictors: PredictorMatrix
    outcome: Union[ContinuousOutcome, SurvivalOutcome]


def _streams(scenario: SimulationScenario) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(scenario.seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(_STREAMS, children)}


def _even_partition(total: int, parts: int) -> list[tuple[int, ...]]:
    sizes = [total // parts + (1 if r < total % parts else 0) for r in range(parts)]
    out = []
    start = 0
    for size in sizes:
        out.append(tuple(range(start, start + size)))
        start += size
    return out


def feature_names(p: int) -> tuple[str, ...]:
    return tuple(f"x{j:04d}" for j in range(p))


def response_names(q: int) -> tuple[str, ...]:
    return tuple(f"y{k:04d}" for k in range(q))


def x_groups(scenario: SimulationScenario) -> GroupStructure:
    members = _even_partition(scenario.p, scenario.x_group_count)
    return GroupStructure(tuple((f"xg{i:02d}", m) for i, m in enumerate(members)))


def y_groups(scenario: SimulationScenario) -> GroupStructure:
    members = _even_partition(scenario.q, scenario.y_group_count)
    return GroupStructure(tuple((f"yg{i:02d}", m) for i, m in enumerate(members)))


def _ar1_sample(rng: np.random.Generator, n: int, scenario: SimulationScenario) -> np.ndarray:
    """Rows i.i.d. normal with blockwise AR(1) covariance, unit variances."""
    rho = scenario.within_block_correlation
    Z = rng.standard_normal((n, scenario.p))
    X = np.empty_like(Z)
    scale = math.sqrt(1.0 - rho * rho)
    for _, members in x_groups(scenario).groups:
        prev = members[0]
        X[:, prev] = Z[:, prev]
        for j in members[1:]:
            X[:, j] = rho * X[:, prev] + scale * Z[:, j]
            prev = j
    return X


def gen_predictors(scenario: SimulationScenario) -> PredictorMatrix:
    rng = _streams(scenario)["x"]
    return PredictorMatrix(_ar1_sample(rng, scenario.n, scenario), feature_names(scenario.p))


def gen_ground_truth(scenario: SimulationScenario) -> GroundTruth:
    """Pick supports with the requested overlap and fill signed effects.

    Each important imaging-model feature loads on two randomly chosen
    response groups; signs alternate deterministically along the
    support so effects average out to roughly zero.
    """
    rng = _streams(scenario)["truth"]
    p, q, s = scenario.p, scenario.q, scenario.n_important
    important2 = np.sort(rng.choice(p, size=s, replace=False))
    n_shared = int(math.floor(scenario.overlap_fraction * s))
    shared = np.sort(rng.choice(important2, size=n_shared, replace=False))
    pool = np.setdiff1d(np.arange(p), important2)
    extra = np.sort(rng.choice(pool, size=s - n_shared, replace=False))
    important1 = np.sort(np.concatenate([shared, extra]))

    G = np.zeros(p)
    for rank, j in enumerate(important2):
        G[j] = scenario.effect_size * (1.0 if rank % 2 == 0 else -1.0)

    ygs = y_groups(scenario).groups
    B = np.zeros((p, q))
    sign = 1.0
    for j in important1:
        picked = rng.choice(len(ygs), size=min(2, len(ygs)), replace=False)
        for gi in np.sort(picked):
            for k in ygs[gi][1]:
                B[j, k] = scenario.effect_size * sign
                sign = -sign
    return GroundTruth(
        B_true=CoefficientMatrix(B),
        G_true=CoefficientVector(G),
        important_model1=tuple(int(j) for j in important1),
        important_model2=tuple(int(j) for j in important2),
    )


def _linear_outcomes(scenario, X, truth, rng_y, rng_z):
    Y = X.values @ truth.B_true.values + scenario.noise_sd * rng_y.standard_normal(
        (X.n, scenario.q)
    )
    z = X.values @ truth.G_true.values + scenario.noise_sd * rng_z.standard_normal(X.n)
    return MultiResponse(Y, response_names(scenario.q)), ContinuousOutcome(z)


def gen_linear(scenario: SimulationScenario):
    """One continuous-outcome dataset pair sharing a predictor matrix."""
    if scenario.survival:
        raise InvalidInputError("gen_linear needs a continuous-outcome scenario")
    streams = _streams(scenario)
    truth = gen_ground_truth(scenario)
    X = PredictorMatrix(
        _ar1_sample(streams["x"], scenario.n, scenario), feature_names(scenario.p)
    )
    Y, z = _linear_outcomes(scenario, X, truth, streams["noise_y"], streams["noise_z"])
    return Dataset1(X, Y), Dataset2(X, z), truth


def calibrate_censoring_rate(hazards: np.ndarray, target: float) -> float:
    """Exponential censoring rate whose expected censored fraction is ``target``.

    With event rate lambda_i and censoring rate c, subject i is censored
    with probability c / (c + lambda_i); the mean over subjects is
    monotone in c, so bisection on a wide bracket always lands.
    """
    if target == 0.0:
        return 0.0
    mean_frac = lambda c: float(np.mean(c / (c + hazards))) - target
    lo, hi = 1e-12, 1e12
    if mean_frac(lo) > 0.0 or mean_frac(hi) < 0.0:
        raise CalibrationError(
            f"censoring target {target} unreachable for hazards in "
            f"[{hazards.min():.3g}, {hazards.max():.3g}]"
        )
    return float(brentq(mean_frac, lo, hi, xtol=1e-14, rtol=1e-14))


def gen_survival(scenario: SimulationScenario):
    """One survival dataset pair: exponential event times, calibrated censoring."""
    if not scenario.survival:
        raise InvalidInputError("gen_survival needs a survival scenario")
    streams = _streams(scenario)
    truth = gen_ground_truth(scenario)
    X = PredictorMatrix(
        _ar1_sample(streams["x"], scenario.n, scenario), feature_names(scenario.p)
    )
    Y = MultiResponse(
        X.values @ truth.B_true.values
        + scenario.noise_sd * streams["noise_y"].standard_normal((X.n, scenario.q)),
        response_names(scenario.q),
    )
    surv = _survival_outcome(scenario, X, truth, streams["noise_z"], streams["censor"])
    return Dataset1(X, Y), Dataset2(X, surv), truth


def _survival_outcome(scenario, X, truth, rng_t, rng_c) -> SurvivalOutcome:
    hazards = scenario.baseline_hazard * np.exp(X.values @ truth.G_true.values)
    T = rng_t.exponential(1.0 / hazards)
    rate = calibrate_censoring_rate(hazards, scenario.censor_target)
    if rate == 0.0:
        return SurvivalOutcome(T, np.ones(X.n, dtype=np.int64))
    C = rng_c.exponential(1.0 / rate, size=X.n)
    time = np.minimum(T, C)
    event = (T <= C).astype(np.int64)
    return SurvivalOutcome(time, event)


def gen_test_outcome(scenario: SimulationScenario, truth: GroundTruth, size: int = 200):
    """Held-out evaluation pair drawn from the same design and truth."""
    streams = _streams(scenario)
    test_scenario = replace(scenario, n=size)
    X = PredictorMatrix(
        _ar1_sample(streams["x_test"], size, test_scenario), feature_names(scenario.p)
    )
    if scenario.survival:
        outcome = _survival_outcome(test_scenario, X, truth, streams["noise_test"],
                                    streams["censor_test"])
        return X, outcome
    z = X.values @ truth.G_true.values + scenario.noise_sd * streams[
        "noise_test"
    ].standard_normal(size)
    return X, ContinuousOutcome(z)


_PRESETS = {
    "LS1": dict(n=100, effect_size=0.5, outcome_kind="continuous"),
    "LS2": dict(n=50, effect_size=0.5, outcome_kind="continuous"),
    "LS3": dict(n=100, effect_size=0.3, outcome_kind="continuous"),
    "LS4": dict(n=50, effect_size=0.3, outcome_kind="continuous"),
    "S1": dict(n=100, effect_size=0.3, outcome_kind="survival"),
    "S2": dict(n=50, effect_size=0.3, outcome_kind="survival"),
    "S3": dict(n=100, effect_size=0.25, outcome_kind="survival"),
    "S4": dict(n=50, effect_size=0.25, outcome_kind="survival"),
}


def preset_names() -> tuple[str, ...]:
    return tuple(_PRESETS)


def scenario_presets(name: str, overlap: float, seed: int = 0, **overrides) -> SimulationScenario:
    """Named designs: LS* are continuous-outcome, S* survival."""
    try:
        base = dict(_PRESETS[name.upper()])
    except KeyError:
        raise InvalidInputError(
            f"unknown preset {name!r}; choose one of {', '.join(_PRESETS)}"
        ) from None
    base.update(overlap_fraction=overlap, seed=seed)
    base.update(overrides)
    return SimulationScenario(**base)
