"""Command line entry: simulate, fit, cv, evaluate, replicate.

Exit codes: 0 success, 1 usage error, 2 data/file error, 3 numerical
failure. All commands are deterministic under --seed; rerunning with the
same flags rewrites byte-identical artifacts (study.csv excepted, it
records wall-clock runtimes).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .core import (
    PenaltyWeights,
    SolverConfig,
    cross_block_groups,
)
from .errors import (
    CalibrationError,
    DataFormatError,
    InvalidInputError,
    SolverError,
)
from .joint import JointProblem, build_two_dataset_problem, fit_joint
from .linear_solver import fit_model1
from .metrics import (
    null_prediction_error,
    prediction_error,
    rrpe,
    survival_auc,
    tpr_tnr,
)
from .prox import kkt_residual_model1, kkt_residual_model2
from .simgen import (
    gen_linear,
    gen_survival,
    gen_test_outcome,
    preset_names,
    scenario_presets,
    x_groups,
    y_groups,
)
from .study import StudyConfig, run_study, write_study_csv
from .tuning import cv_grid_search, default_grid
from .weights import weights_from_beta

log = logging.getLogger(__name__)

DATASET_FILES = (
    "X.csv",
    "Y.csv",
    "outcome.csv",
    "groups_x.csv",
    "groups_y.csv",
    "truth.json",
    "manifest.json",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="base RNG seed")
    sub.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jointsgl", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="write a synthetic dataset directory")
    sim.add_argument("--preset", required=True, choices=preset_names())
    sim.add_argument("--overlap", type=float, required=True,
                     help="fraction of outcome-model features shared with model 1")
    _add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    fit = commands.add_parser("fit", help="fit the joint model from dataset directories")
    fit.add_argument("--data", required=True, help="dataset directory (model 1, or both models)")
    fit.add_argument("--data2", help="second dataset directory (outcome model)")
    fit.add_argument("--config", required=True, help="JSON config with lambdas and alpha")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    cv = commands.add_parser("cv", help="cross-validate lambdas for both models")
    cv.add_argument("--data", required=True)
    cv.add_argument("--config", help="optional JSON config supplying alpha and solver settings")
    cv.add_argument("--grid-size", type=int, default=5, help="lambda path points per model")
    cv.add_argument("--folds", type=int, default=5)
    _add_common(cv)
    cv.set_defaults(func=cmd_cv)

    ev = commands.add_parser("evaluate", help="score fitted coefficients against truth")
    ev.add_argument("--data", required=True, help="dataset directory with truth.json + manifest")
    ev.add_argument("--out", required=True,
                    help="directory holding coefficient files; metrics.json is written here")
    ev.add_argument("--times", default="12",
                    help="comma-separated evaluation times for survival AUC")
    ev.set_defaults(func=cmd_evaluate)

    rep = commands.add_parser("replicate", help="run a replication study end to end")
    rep.add_argument("--preset", required=True, choices=preset_names())
    rep.add_argument("--overlap", type=float, required=True)
    rep.add_argument("--reps", type=int, default=10)
    rep.add_argument("--grid-size", type=int, default=7)
    rep.add_argument("--folds", type=int, default=5)
    rep.add_argument("--times", default="12")
    rep.add_argument("--workers", type=int, default=None,
                     help="parallel replications (default: JOINTSGL_WORKERS or core count)")
    _add_common(rep)
    rep.set_defaults(func=cmd_replicate)
    return parser


def _parse_times(text: str) -> tuple[float, ...]:
    try:
        times = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise InvalidInputError(f"--times must be comma-separated numbers, got {text!r}") from None
    if not times:
        raise InvalidInputError("--times is empty")
    return times


def _workers(flag) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("JOINTSGL_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidInputError(f"JOINTSGL_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    scenario = scenario_presets(args.preset, args.overlap, seed=args.seed)
    d1, d2, truth = gen_survival(scenario) if scenario.survival else gen_linear(scenario)
    out = _outdir(args.out)
    io.write_predictors(out / "X.csv", d1.predictors)
    io.write_responses(out / "Y.csv", d1.responses)
    io.write_outcome(out / "outcome.csv", d2.outcome)
    io.write_groups(out / "groups_x.csv", x_groups(scenario), d1.predictors.feature_names)
    io.write_groups(out / "groups_y.csv", y_groups(scenario), d1.responses.response_names)
    io.write_truth(out / "truth.json", truth, d1.predictors.feature_names,
                   d1.responses.response_names)
    io.write_manifest(out / "manifest.json", scenario, DATASET_FILES)
    print(f"wrote {scenario.outcome_kind} dataset (n={scenario.n}, p={scenario.p}, "
          f"q={scenario.q}) to {out}")
    return 0


def _read_model1_data(data: Path):
    X = io.read_predictors(data / "X.csv")
    Y = io.read_responses(data / "Y.csv")
    xg = io.read_groups(data / "groups_x.csv", X.feature_names)
    yg = io.read_groups(data / "groups_y.csv", Y.response_names)
    return X, Y, xg, yg


def _solver_configs(config: io.FitConfig) -> tuple[SolverConfig, SolverConfig]:
    cfg1 = SolverConfig(alpha=config.alpha, lambda_feature=config.lambda1_feature,
                        lambda_group=config.lambda1_group, **config.overrides)
    cfg2 = replace(cfg1, lambda_feature=config.lambda2_feature,
                   lambda_group=config.lambda2_group)
    return cfg1, cfg2


def _check_outcome_kind(config: io.FitConfig, outcome) -> None:
    found = "survival" if hasattr(outcome, "event") else "continuous"
    if found != config.outcome:
        raise DataFormatError(
            f"config expects a {config.outcome} outcome but outcome.csv holds {found} data"
        )


def _weight_summary(weights: PenaltyWeights) -> dict:
    def stats(v):
        return {"min": float(v.min()), "mean": float(v.mean()), "max": float(v.max())}

    return {"feature": stats(weights.feature_weights), "group": stats(weights.group_weights)}


def cmd_fit(args) -> int:
    data = Path(args.data)
    config = io.read_config(args.config)
    cfg1, cfg2 = _solver_configs(config)
    X, Y, xg, yg = _read_model1_data(data)
    dropped: tuple[str, ...] = ()
    if args.data2:
        data2 = Path(args.data2)
        X2 = io.read_predictors(data2 / "X.csv")
        outcome = io.read_outcome(data2 / "outcome.csv")
        _check_outcome_kind(config, outcome)
        problem = build_two_dataset_problem(X, Y, X2, outcome, xg, yg, cfg1, cfg2)
        dropped = problem.dropped_features
    else:
        outcome = io.read_outcome(data / "outcome.csv")
        _check_outcome_kind(config, outcome)
        problem = JointProblem(X, Y, X, outcome, xg, yg, cfg1, cfg2)
    result = fit_joint(problem)

    out = _outdir(args.out)
    feature_names = problem.predictors1.feature_names
    io.write_coefficient_matrix(out / "coefficients_model1.csv", result.model1.coefficients,
                                feature_names, problem.responses.response_names)
    io.write_coefficient_vector(out / "coefficients_model2.csv", result.model2.coefficients,
                                feature_names)

    blocks = cross_block_groups(problem.x_groups, problem.y_groups)
    w1, w2 = result.final_weights
    report = {
        "schema_version": io.CONFIG_SCHEMA_VERSION,
        "mode": "separate-model mode" if problem.alpha == 0.0 else "joint",
        "alpha": problem.alpha,
        "outcome": config.outcome,
        "converged": result.converged,
        "joint_iterations": result.joint_iterations,
        "dropped_features": list(dropped),
        "model1": {
            "lambda_feature": cfg1.lambda_feature,
            "lambda_group": cfg1.lambda_group,
            "converged": result.model1.converged,
            "outer_iterations": result.model1.iterations.outer,
            "inner_iterations": result.model1.iterations.inner,
            "final_objective": result.model1.final_objective,
            "nonzero": result.model1.coefficients.nonzero_count(),
            "kkt_residual": kkt_residual_model1(
                problem.predictors1.values, problem.responses.values,
                result.model1.coefficients.values, blocks, w1, cfg1),
            "weights": _weight_summary(w1),
        },
        "model2": {
            "lambda_feature": cfg2.lambda_feature,
            "lambda_group": cfg2.lambda_group,
            "converged": result.model2.converged,
            "outer_iterations": result.model2.iterations.outer,
            "inner_iterations": result.model2.iterations.inner,
            "final_objective": result.model2.final_objective,
            "nonzero": result.model2.coefficients.nonzero_count(),
            "kkt_residual": kkt_residual_model2(
                problem.predictors2.values, problem.outcome,
                result.model2.coefficients.values, problem.x_groups, w2, cfg2),
            "weights": _weight_summary(w2),
        },
    }
    if config.outcome == "continuous":
        report["z_train_mean"] = float(np.mean(problem.outcome.values))
    io.write_json(out / "fit_report.json", report)
    print(f"fit {'converged' if result.converged else 'DID NOT converge'} "
          f"in {result.joint_iterations} joint pass(es); "
          f"model1 nonzero={report['model1']['nonzero']}, "
          f"model2 nonzero={report['model2']['nonzero']}")
    return 0


def cmd_cv(args) -> int:
    data = Path(args.data)
    X, Y, xg, yg = _read_model1_data(data)
    outcome = io.read_outcome(data / "outcome.csv")
    survival = hasattr(outcome, "event")
    outcome_kind = "survival" if survival else "continuous"

    if args.config:
        base = io.read_config(args.config)
        if base.outcome != outcome_kind:
            raise DataFormatError(
                f"config expects a {base.outcome} outcome but outcome.csv holds {outcome_kind} data"
            )
        alpha = base.alpha
        overrides = base.overrides
    else:
        alpha = 2.0 if survival else 1.0
        overrides = {}

    blocks = cross_block_groups(xg, yg)
    unit = PenaltyWeights.unit(X.p, xg.n_groups)
    cv_cfg = SolverConfig(alpha=0.0, max_outer_iter=60, **overrides)

    grid1 = default_grid(X, Y, blocks, unit, size=args.grid_size, cfg=cv_cfg)
    (lf1, lg1), cells1 = cv_grid_search(X, Y, blocks, unit, grid1,
                                        k=args.folds, seed=args.seed, cfg=cv_cfg)

    prelim = fit_model1(X, Y, blocks, unit,
                        SolverConfig(lambda_feature=lf1, lambda_group=lg1, **overrides))
    w2 = weights_from_beta(prelim.coefficients.values, xg) if alpha != 0.0 else unit
    cv_cfg2 = replace(cv_cfg, alpha=alpha)
    grid2 = default_grid(X, outcome, xg, w2, size=args.grid_size, cfg=cv_cfg2)
    (lf2, lg2), cells2 = cv_grid_search(X, outcome, xg, w2, grid2,
                                        k=args.folds, seed=args.seed, cfg=cv_cfg2)

    out = _outdir(args.out)
    io.write_cv_table(out / "cv_table_model1.csv", cells1)
    io.write_cv_table(out / "cv_table_model2.csv", cells2)
    io.write_config(out / "best_config.json",
                    io.FitConfig(alpha, outcome_kind, lf1, lg1, lf2, lg2, dict(overrides)))
    print(f"model1 lambdas ({lf1:.6g}, {lg1:.6g}); model2 lambdas ({lf2:.6g}, {lg2:.6g})")
    return 0


def cmd_evaluate(args) -> int:
    data = Path(args.data)
    out = Path(args.out)
    truth = io.read_truth(data / "truth.json")
    scenario = io.read_manifest(data / "manifest.json")
    B_hat, _, _ = io.read_coefficient_matrix(out / "coefficients_model1.csv")
    g_hat, _ = io.read_coefficient_vector(out / "coefficients_model2.csv")
    sel1 = tpr_tnr(B_hat, truth.B_true)
    sel2 = tpr_tnr(g_hat, truth.G_true)
    metrics = {
        "schema_version": io.CONFIG_SCHEMA_VERSION,
        "model1": {"tpr": sel1.tpr, "tnr": sel1.tnr},
        "model2": {"tpr": sel2.tpr, "tnr": sel2.tnr},
    }
    X_test, outcome_test = gen_test_outcome(scenario, truth)
    if scenario.survival:
        risk = X_test.values @ g_hat.values
        metrics["auc"] = {
            f"{t:g}": survival_auc(risk, outcome_test, t) for t in _parse_times(args.times)
        }
    else:
        train_outcome = io.read_outcome(data / "outcome.csv")
        pe = prediction_error(g_hat, X_test, outcome_test)
        pe_null = null_prediction_error(float(np.mean(train_outcome.values)), outcome_test)
        metrics["prediction_error"] = pe
        metrics["null_prediction_error"] = pe_null
        metrics["rrpe"] = rrpe(pe_null, pe)
    io.write_json(out / "metrics.json", metrics)
    print(f"model1 tpr={sel1.tpr:.4f} tnr={sel1.tnr:.4f}; "
          f"model2 tpr={sel2.tpr:.4f} tnr={sel2.tnr:.4f}")
    return 0


def cmd_replicate(args) -> int:
    config = StudyConfig(
        preset=args.preset,
        overlap=args.overlap,
        reps=args.reps,
        seed=args.seed,
        model2_grid=args.grid_size,
        folds=args.folds,
        eval_times=_parse_times(args.times),
        workers=_workers(args.workers),
    )
    result = run_study(config)
    out = _outdir(args.out)
    write_study_csv(out / "study.csv", result)
    for row in result.mean_rows():
        cells = [f"{key}={row[key]:.4f}" for key in result.header
                 if isinstance(row[key], float)]
        print(f"{row['method']} mean: " + " ".join(cells))
    return 0


def entry(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (DataFormatError, InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, CalibrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(entry())
