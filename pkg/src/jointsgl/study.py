"""Replication study driver: simulate -> tune -> fit -> evaluate.

Per replication (seed = base seed + replication index):
  1. Model-1 lambdas come from 5-fold CV over a small unit-weight grid.
  2. A preliminary model-1 fit at those lambdas generates penalty weights
     for the outcome model.
  3. Each method tunes its own model-2 lambdas by CV: the joint method
     with the generated weights at its alpha, the baseline with unit
     weights at alpha = 0. The selected lambda is the smallest grid point
     whose mean CV error sits within one standard error of the minimum.
     The CV curve is nearly flat around its minimum here while the cost
     of over-penalizing is asymmetric: dropped true features only harden
     (their weights grow once excluded), whereas under-penalizing merely
     costs specificity.
  4. fit_joint runs per method at the fixed lambdas; metrics compare the
     converged coefficients against simulated truth on fresh test data.

CV fits run under a capped outer-iteration budget since only the lambda
ranking is consumed; final fits get the full budget.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import PenaltyWeights, SolverConfig, cross_block_groups
from .errors import CalibrationError, InvalidInputError, SolverError
from .joint import JointProblem, fit_joint
from .linear_solver import fit_model1
from .metrics import (
    null_prediction_error,
    prediction_error,
    rrpe,
    survival_auc,
    tpr_tnr,
)
from .simgen import (
    SimulationScenario,
    gen_linear,
    gen_survival,
    gen_test_outcome,
    scenario_presets,
    x_groups,
    y_groups,
)
from .tuning import cv_grid_search, default_grid
from .weights import weights_from_beta

log = logging.getLogger(__name__)

CV_MAX_OUTER = 60
METHODS = ("joint", "separate")


@dataclass(frozen=True)
class StudyConfig:
    preset: str
    overlap: float
    reps: int = 10
    seed: int = 0
    alpha: float | None = None
    model1_grid: int = 3
    model2_grid: int = 7
    folds: int = 5
    eval_times: tuple[float, ...] = (12.0,)
    test_size: int = 200
    workers: int = 1
    scenario_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reps < 1:
            raise InvalidInputError("reps must be >= 1")
        if self.workers < 1:
            raise InvalidInputError("workers must be >= 1")
        object.__setattr__(self, "eval_times", tuple(float(t) for t in self.eval_times))

    def scenario(self, rep_index: int) -> SimulationScenario:
        return scenario_presets(self.preset, self.overlap, seed=self.seed + rep_index,
                                **self.scenario_overrides)

    def joint_alpha(self, survival: bool) -> float:
        if self.alpha is not None:
            return self.alpha
        return 2.0 if survival else 1.0


@dataclass(frozen=True)
class StudyResult:
    header: tuple[str, ...]
    rows: tuple[dict, ...]

    def mean_rows(self) -> tuple[dict, ...]:
        means = []
        for method in METHODS:
            ok = [r for r in self.rows if r["method"] == method and r["status"] == "ok"]
            row = {key: "" for key in self.header}
            row.update(method=method, replication="mean", status=f"ok:{len(ok)}")
            if ok:
                row["overlap"] = ok[0]["overlap"]
                for key in self.header:
                    if key in ("replication", "seed"):
                        continue
                    vals = [r[key] for r in ok]
                    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
                        row[key] = float(np.nanmean([float(v) for v in vals]))
            means.append(row)
        return tuple(means)


def _metric_columns(survival: bool, eval_times) -> tuple[str, ...]:
    cols = ["tpr_model1", "tnr_model1", "tpr_model2", "tnr_model2"]
    if survival:
        cols += [f"auc_t{t:g}" for t in eval_times]
        cols.append("censoring_rate")
    else:
        cols.append("rrpe")
    return tuple(cols)


def study_header(survival: bool, eval_times=(12.0,)) -> tuple[str, ...]:
    return (
        "method",
        "overlap",
        "replication",
        "seed",
        "status",
        *_metric_columns(survival, eval_times),
        "lambda1_feature",
        "lambda1_group",
        "lambda2_feature",
        "lambda2_group",
        "joint_iterations",
        "converged",
        "runtime_s",
    )


def _cv_config(alpha: float) -> SolverConfig:
    return SolverConfig(alpha=alpha, max_outer_iter=CV_MAX_OUTER)


def select_model1_lambdas(d1, blocks, unit, folds, grid_size, seed):
    cfg = _cv_config(0.0)
    grid = default_grid(d1.predictors, d1.responses, blocks, unit, size=grid_size, cfg=cfg)
    (lf, lg), _ = cv_grid_search(
        d1.predictors, d1.responses, blocks, unit, grid, k=folds, seed=seed, cfg=cfg
    )
    return lf, lg


def outcome_weights(d1, blocks, groups, unit, lf1, lg1) -> PenaltyWeights:
    """Penalty weights for the outcome model's CV, from model-1 estimates."""
    prelim = fit_model1(
        d1.predictors, d1.responses, blocks, unit,
        SolverConfig(lambda_feature=lf1, lambda_group=lg1),
    )
    return weights_from_beta(prelim.coefficients.values, groups)


def select_within_one_se(cells) -> tuple[float, float]:
    """Smallest lambda pair whose mean CV error is within one SE of the best.

    Candidates are ordered by (lambda_feature, lambda_group); the SE is the
    fold-level standard error of the best cell. Cells that failed (infinite
    error) never qualify.
    """
    finite = [c for c in cells if np.isfinite(c.mean_error)]
    if not finite:
        raise SolverError("every CV cell failed")
    best = min(finite, key=lambda c: (c.mean_error, -c.lambda_feature, -c.lambda_group))
    spread = np.std(np.asarray(best.fold_errors, dtype=float), ddof=1) if len(
        best.fold_errors) > 1 else 0.0
    cutoff = best.mean_error + spread / np.sqrt(len(best.fold_errors))
    eligible = [c for c in finite if c.mean_error <= cutoff]
    pick = min(eligible, key=lambda c: (c.lambda_feature, c.lambda_group))
    return pick.lambda_feature, pick.lambda_group


def _fit_method(d1, d2, xg, yg, alpha, lf1, lg1, lf2, lg2):
    cfg1 = SolverConfig(alpha=alpha, lambda_feature=lf1, lambda_group=lg1)
    cfg2 = SolverConfig(alpha=alpha, lambda_feature=lf2, lambda_group=lg2)
    problem = JointProblem(
        d1.predictors, d1.responses, d2.predictors, d2.outcome, xg, yg, cfg1, cfg2
    )
    return fit_joint(problem)


def run_replication(config: StudyConfig, rep_index: int) -> list[dict]:
    scenario = config.scenario(rep_index)
    survival = scenario.survival
    header = study_header(survival, config.eval_times)
    base = {
        "overlap": config.overlap,
        "replication": rep_index,
        "seed": scenario.seed,
    }
    rows = []
    try:
        rows_ok = _run_replication_inner(config, scenario, base, header)
    except (SolverError, CalibrationError) as exc:
        log.warning("replication %d failed: %s", rep_index, exc)
        for method in METHODS:
            row = {key: float("nan") for key in header}
            row.update(base, method=method, status=f"failed: {exc}")
            rows.append(row)
        return rows
    return rows_ok


def _run_replication_inner(config, scenario, base, header) -> list[dict]:
    survival = scenario.survival
    started = time.monotonic()
    d1, d2, truth = gen_survival(scenario) if survival else gen_linear(scenario)
    X_test, outcome_test = gen_test_outcome(scenario, truth, size=config.test_size)
    xg, yg = x_groups(scenario), y_groups(scenario)
    blocks = cross_block_groups(xg, yg)
    unit = PenaltyWeights.unit(scenario.p, xg.n_groups)

    lf1, lg1 = select_model1_lambdas(
        d1, blocks, unit, config.folds, config.model1_grid, scenario.seed
    )
    alpha_joint = config.joint_alpha(survival)
    weighted = outcome_weights(d1, blocks, xg, unit, lf1, lg1)

    rows = []
    for method in METHODS:
        t0 = time.monotonic()
        alpha = alpha_joint if method == "joint" else 0.0
        w2 = weighted if method == "joint" else unit
        cfg2 = _cv_config(alpha)
        grid2 = default_grid(
            d2.predictors, d2.outcome, xg, w2, size=config.model2_grid, cfg=cfg2
        )
        _, cells = cv_grid_search(
            d2.predictors, d2.outcome, xg, w2, grid2,
            k=config.folds, seed=scenario.seed, cfg=cfg2,
        )
        lf2, lg2 = select_within_one_se(cells)
        result = _fit_method(d1, d2, xg, yg, alpha, lf1, lg1, lf2, lg2)
        sel1 = tpr_tnr(result.model1.coefficients, truth.B_true)
        sel2 = tpr_tnr(result.model2.coefficients, truth.G_true)
        row = dict(base)
        row.update(
            method=method,
            status="ok",
            tpr_model1=sel1.tpr,
            tnr_model1=sel1.tnr,
            tpr_model2=sel2.tpr,
            tnr_model2=sel2.tnr,
            lambda1_feature=lf1,
            lambda1_group=lg1,
            lambda2_feature=lf2,
            lambda2_group=lg2,
            joint_iterations=result.joint_iterations,
            converged=result.converged,
        )
        gamma = result.model2.coefficients
        if survival:
            risk = X_test.values @ gamma.values
            for t in config.eval_times:
                row[f"auc_t{t:g}"] = survival_auc(risk, outcome_test, t)
            row["censoring_rate"] = 1.0 - float(np.mean(d2.outcome.event))
        else:
            pe = prediction_error(gamma, X_test, outcome_test)
            pe_null = null_prediction_error(float(np.mean(d2.outcome.values)), outcome_test)
            row["rrpe"] = rrpe(pe_null, pe)
        row["runtime_s"] = time.monotonic() - t0
        rows.append(row)
    total = time.monotonic() - started
    shared = total - sum(r["runtime_s"] for r in rows)
    for r in rows:
        r["runtime_s"] = round(r["runtime_s"] + shared / len(rows), 3)
        missing = [key for key in header if key not in r]
        if missing:
            raise RuntimeError(f"replication row missing columns {missing}")
    return rows


def _replication_task(args):
    config, rep_index = args
    return run_replication(config, rep_index)


def run_study(config: StudyConfig) -> StudyResult:
    survival = config.scenario(0).survival
    header = study_header(survival, config.eval_times)
    tasks = [(config, r) for r in range(config.reps)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_rep = list(pool.map(_replication_task, tasks))
    else:
        per_rep = [run_replication(config, r) for r in range(config.reps)]
    rows = [row for rep_rows in per_rep for row in rep_rows]
    rows.sort(key=lambda r: (METHODS.index(r["method"]), r["replication"]))
    return StudyResult(header=header, rows=tuple(rows))


def write_study_csv(path, result: StudyResult) -> None:
    import csv

    from .io import format_real

    def cell(value):
        if isinstance(value, bool):
            return str(int(value))
        if isinstance(value, float):
            return format_real(value)
        return str(value)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.header)
        for row in result.rows + result.mean_rows():
            writer.writerow([cell(row[key]) for key in result.header])
