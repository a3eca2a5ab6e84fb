"""Release gate: one test per acceptance check, each printing PASS/FAIL.

The two study checks (07, 08) run full 10-replication benchmarks and
dominate the suite's runtime; everything else finishes in seconds.
Budgets assume a single worker, so they pass on any ordinary machine.
"""

import time
from dataclasses import replace

import numpy as np
from numpy.random import default_rng

from jointsgl import (
    BlockGroupStructure,
    GroupStructure,
    JointProblem,
    PenaltyWeights,
    SimulationScenario,
    SolverConfig,
    StudyConfig,
    SurvivalOutcome,
    cox_gradient,
    cross_block_groups,
    fit_joint,
    fit_model1,
    fit_model2_cox,
    fit_model2_linear,
    io,
    run_study,
    survival_auc,
)
from jointsgl.cli import DATASET_FILES, entry
from jointsgl.prox import (
    cox_partial_loss,
    kkt_residual_model1,
    kkt_residual_model2,
)
from jointsgl.simgen import gen_linear, gen_survival, x_groups, y_groups
from jointsgl.weights import clamp_log, unit_mean_weights
from oracles import central_difference, cox_newton, least_squares, pairwise_auc

TIGHT = SolverConfig(inner_tol=1e-10, outer_tol=1e-10, max_outer_iter=500)


def verdict(num, ok, detail=""):
    line = f"acceptance {num:02d}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line.rstrip())
    assert ok, line


def random_weights(rng, p, n_groups):
    fw = rng.uniform(0.3, 1.7, p)
    gw = rng.uniform(0.3, 1.7, n_groups)
    return PenaltyWeights(fw / fw.mean(), gw / gw.mean())


def overlapping_blocks():
    left = tuple((f, r) for f in range(6) for r in range(2))
    right = tuple((f, r) for f in range(4, 10) for r in range(1, 4))
    return BlockGroupStructure((("left", left), ("right", right)), weight_keys=(0, 1))


def overlapping_groups():
    return GroupStructure((("g0", tuple(range(6))), ("g1", tuple(range(4, 10)))))


def survival_instance(rng, n, p):
    X = rng.standard_normal((n, p))
    times = rng.exponential(1.0, n) + 0.05
    event = (rng.uniform(size=n) > 0.2).astype(int)
    event[0] = 1
    return X, SurvivalOutcome(times, event)


def test_criterion_01_kkt_oracle():
    rng = default_rng(10)
    blocks = overlapping_blocks()
    groups = overlapping_groups()
    cfg = replace(TIGHT, lambda_feature=0.08, lambda_group=0.05)
    started = time.monotonic()
    worst = 0.0
    for k in range(20):
        alpha = (0, 1, 2)[k % 3]
        X = rng.standard_normal((30, 10))
        Y = rng.standard_normal((30, 4))
        z = rng.standard_normal(30)
        weights = random_weights(rng, 10, 2)
        c = replace(cfg, alpha=alpha)
        r1 = fit_model1(X, Y, blocks, weights, c)
        r2 = fit_model2_linear(X, z, groups, weights, c)
        assert r1.converged and r2.converged
        worst = max(
            worst,
            kkt_residual_model1(X, Y, r1.coefficients.values, blocks, weights, c),
            kkt_residual_model2(X, z, r2.coefficients.values, groups, weights, c),
        )
    elapsed = time.monotonic() - started
    verdict(1, worst < 1e-4 and elapsed < 30,
            f"max KKT residual {worst:.2e} over 20 instances, {elapsed:.1f}s")


def test_criterion_02_least_squares_reduction():
    rng = default_rng(11)
    X = rng.standard_normal((50, 5))
    Y = rng.standard_normal((50, 3))
    z = rng.standard_normal(50)
    blocks = cross_block_groups(
        GroupStructure((("gx", (0, 1, 2, 3, 4)),)), GroupStructure((("gy", (0, 1, 2)),))
    )
    groups = GroupStructure((("gx", (0, 1, 2, 3, 4)),))
    unit = PenaltyWeights.unit(5, 1)
    r1 = fit_model1(X, Y, blocks, unit, TIGHT)
    r2 = fit_model2_linear(X, z, groups, unit, TIGHT)
    gap1 = np.abs(r1.coefficients.values - least_squares(X, Y)).max()
    gap2 = np.abs(r2.coefficients.values - least_squares(X, z.reshape(-1, 1))[:, 0]).max()
    worst = max(gap1, gap2)
    verdict(2, worst < 1e-6, f"max deviation from lstsq {worst:.2e}")


def test_criterion_03_cox_gradient_and_newton():
    rng = default_rng(12)
    worst_rel = 0.0
    for _ in range(20):
        X, surv = survival_instance(rng, 30, 3)
        gamma = rng.standard_normal(3) * 0.5
        grad = cox_gradient(X, surv, gamma)
        fd = central_difference(
            lambda g: cox_partial_loss(X, surv.time, surv.event, g), gamma, h=1e-5
        )
        worst_rel = max(worst_rel, np.abs(fd - grad).max() / max(np.abs(grad).max(), 1e-12))
    X, surv = survival_instance(default_rng(13), 50, 2)
    groups = GroupStructure((("g", (0, 1)),))
    fit = fit_model2_cox(X, surv, groups, PenaltyWeights.unit(2, 1), TIGHT)
    oracle = cox_newton(X, surv.time, surv.event)
    gap = np.abs(fit.coefficients.values - oracle).max()
    verdict(3, worst_rel < 1e-4 and gap < 1e-4,
            f"gradient rel err {worst_rel:.2e}, Newton gap {gap:.2e}")


def test_criterion_04_alpha_zero_separability():
    scenario = SimulationScenario(
        n=40, effect_size=0.6, overlap_fraction=1.0, p=12, q=6,
        x_group_count=3, y_group_count=2, n_important=4, seed=14,
    )
    ok = True
    for survival in (False, True):
        sc = replace(scenario, outcome_kind="survival" if survival else "continuous")
        d1, d2, _ = gen_survival(sc) if survival else gen_linear(sc)
        xg, yg = x_groups(sc), y_groups(sc)
        cfg = SolverConfig(lambda_feature=0.1, lambda_group=0.05, alpha=0.0)
        joint = fit_joint(JointProblem(
            d1.predictors, d1.responses, d2.predictors, d2.outcome, xg, yg, cfg, cfg
        ))
        blocks = cross_block_groups(xg, yg)
        unit = PenaltyWeights.unit(sc.p, xg.n_groups)
        solo1 = fit_model1(d1.predictors, d1.responses, blocks, unit, cfg)
        solo2 = (fit_model2_cox if survival else fit_model2_linear)(
            d2.predictors, d2.outcome, xg, unit, cfg
        )
        ok = ok and np.array_equal(joint.model1.coefficients.values,
                                   solo1.coefficients.values)
        ok = ok and np.array_equal(joint.model2.coefficients.values,
                                   solo2.coefficients.values)
    verdict(4, ok, "alpha=0 joint fits bitwise-equal to single-model fits")


def test_criterion_05_monotone_descent():
    rng = default_rng(15)
    blocks = overlapping_blocks()
    groups = overlapping_groups()
    worst_rise = -np.inf
    for k in range(10):
        weights = random_weights(rng, 10, 2)
        cfg = SolverConfig(lambda_feature=0.1, lambda_group=0.08, alpha=(0, 1, 2)[k % 3])
        if k % 2 == 0:
            X = rng.standard_normal((35, 10))
            Y = rng.standard_normal((35, 4))
            path = fit_model1(X, Y, blocks, weights, cfg).objective_path
        else:
            X, surv = survival_instance(rng, 35, 10)
            path = fit_model2_cox(X, surv, groups, weights, cfg).objective_path
        if len(path) > 1:
            worst_rise = max(worst_rise, float(np.diff(np.asarray(path)).max()))
    verdict(5, worst_rise <= 1e-10, f"largest objective rise {worst_rise:.2e}")


def test_criterion_06_weight_units():
    checks = [
        np.isclose(clamp_log(np.array([1.0]))[0], -0.01, atol=1e-12),
        np.isclose(clamp_log(np.array([1e-4]))[0], -2.0, atol=1e-12),
        np.isclose(clamp_log(np.array([0.0]))[0], -2.0, atol=1e-12),
    ]
    got = unit_mean_weights(np.array([-0.01, -1.0]))
    checks.append(np.allclose(got, (0.019802, 1.980198), atol=1e-6))
    rng = default_rng(16)
    for _ in range(100):
        w = unit_mean_weights(-rng.uniform(0.01, 2.0, rng.integers(2, 40)))
        checks.append(abs(w.mean() - 1.0) < 1e-12)
    verdict(6, all(checks), "clamp values, normalization example, mean-one invariant")


def test_criterion_09_group_kill_and_lambda_monotonicity(tmp_path):
    data = tmp_path / "data"
    assert entry(["simulate", "--preset", "LS2", "--overlap", "1.0",
                  "--seed", "9", "--out", str(data)]) == 0

    def fit_with(tag, alpha, lam):
        cfg_path = tmp_path / f"cfg_{tag}.json"
        io.write_config(cfg_path, io.FitConfig(alpha, "continuous", *lam, {}))
        out = tmp_path / f"fit_{tag}"
        assert entry(["fit", "--data", str(data), "--config", str(cfg_path),
                      "--out", str(out)]) == 0
        B, _, _ = io.read_coefficient_matrix(out / "coefficients_model1.csv")
        g, _ = io.read_coefficient_vector(out / "coefficients_model2.csv")
        return B.values, g.values

    B, g = fit_with("kill", 1.0, (0.01, 1e6, 0.01, 1e6))
    killed = not B.any() and not g.any()

    counts = []
    for i, lam_f in enumerate((0.3, 0.8, 2.0)):
        B, g = fit_with(f"m{i}", 0.0, (lam_f, 0.1, lam_f, 0.1))
        counts.append((np.count_nonzero(B), np.count_nonzero(g)))
    monotone = all(
        a[0] >= b[0] and a[1] >= b[1] for a, b in zip(counts, counts[1:])
    ) and counts[0] > counts[-1]
    verdict(9, killed and monotone,
            f"group kill exact zeros {killed}, nonzero counts {counts}")


def test_criterion_10_auc_oracle():
    rng = default_rng(17)
    worst = 0.0
    sym = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 13))
        risk = rng.standard_normal(n)
        times = rng.exponential(1.0, n) + 0.05
        surv = SurvivalOutcome(times, np.ones(n, dtype=int))
        t = float(rng.uniform(0.1, 2.0))
        got = survival_auc(risk, surv, t)
        want = pairwise_auc(risk, times, t)
        if np.isnan(want):
            assert np.isnan(got)
            continue
        worst = max(worst, abs(got - want))
        sym = max(sym, abs(survival_auc(-risk, surv, t) - (1.0 - got)))
    verdict(10, worst < 1e-12 and sym < 1e-12,
            f"max oracle gap {worst:.2e}, complement asymmetry {sym:.2e}")


def _write_tiny(out):
    sc = SimulationScenario(
        n=40, effect_size=0.8, overlap_fraction=1.0, p=12, q=6,
        x_group_count=3, y_group_count=2, n_important=4, seed=18,
    )
    d1, d2, truth = gen_linear(sc)
    out.mkdir(parents=True)
    io.write_predictors(out / "X.csv", d1.predictors)
    io.write_responses(out / "Y.csv", d1.responses)
    io.write_outcome(out / "outcome.csv", d2.outcome)
    io.write_groups(out / "groups_x.csv", x_groups(sc), d1.predictors.feature_names)
    io.write_groups(out / "groups_y.csv", y_groups(sc), d1.responses.response_names)
    io.write_truth(out / "truth.json", truth, d1.predictors.feature_names,
                   d1.responses.response_names)
    io.write_manifest(out / "manifest.json", sc, DATASET_FILES)


def test_criterion_11_cli_determinism_and_round_trip(tmp_path):
    checks = []

    def rerun_identical(args, out_a, out_b, names):
        assert entry(args + ["--out", str(out_a)]) == 0
        assert entry(args + ["--out", str(out_b)]) == 0
        same = all((out_a / n).read_bytes() == (out_b / n).read_bytes() for n in names)
        checks.append(same)

    rerun_identical(["simulate", "--preset", "S2", "--overlap", "0.5", "--seed", "21"],
                    tmp_path / "sim_a", tmp_path / "sim_b", DATASET_FILES)

    data = tmp_path / "tiny"
    _write_tiny(data)
    cfg = tmp_path / "cfg.json"
    io.write_config(cfg, io.FitConfig(1.0, "continuous", 0.1, 0.05, 0.1, 0.05, {}))
    fit_args = ["fit", "--data", str(data), "--config", str(cfg)]
    fit_names = ("coefficients_model1.csv", "coefficients_model2.csv", "fit_report.json")
    rerun_identical(fit_args, tmp_path / "fit_a", tmp_path / "fit_b", fit_names)

    cv_args = ["cv", "--data", str(data), "--grid-size", "2", "--folds", "3", "--seed", "4"]
    cv_names = ("cv_table_model1.csv", "cv_table_model2.csv", "best_config.json")
    rerun_identical(cv_args, tmp_path / "cv_a", tmp_path / "cv_b", cv_names)

    for fit_dir in (tmp_path / "fit_a", tmp_path / "fit_b"):
        assert entry(["evaluate", "--data", str(data), "--out", str(fit_dir)]) == 0
    checks.append((tmp_path / "fit_a" / "metrics.json").read_bytes()
                  == (tmp_path / "fit_b" / "metrics.json").read_bytes())

    def round_trips(path, reader, writer):
        copy = tmp_path / ("rt_" + path.name)
        writer(copy, reader(path))
        checks.append(path.read_bytes() == copy.read_bytes())

    sim = tmp_path / "sim_a"
    X = io.read_predictors(sim / "X.csv")
    round_trips(sim / "X.csv", io.read_predictors, io.write_predictors)
    round_trips(sim / "Y.csv", io.read_responses, io.write_responses)
    round_trips(sim / "outcome.csv", io.read_outcome, io.write_outcome)

    gx = io.read_groups(sim / "groups_x.csv", X.feature_names)
    copy = tmp_path / "rt_groups_x.csv"
    io.write_groups(copy, gx, X.feature_names)
    checks.append((sim / "groups_x.csv").read_bytes() == copy.read_bytes())

    truth = io.read_truth(sim / "truth.json")
    copy = tmp_path / "rt_truth.json"
    io.write_truth(copy, truth, X.feature_names,
                   io.read_responses(sim / "Y.csv").response_names)
    checks.append((sim / "truth.json").read_bytes() == copy.read_bytes())

    sc = io.read_manifest(sim / "manifest.json")
    copy = tmp_path / "rt_manifest.json"
    io.write_manifest(copy, sc, DATASET_FILES)
    checks.append((sim / "manifest.json").read_bytes() == copy.read_bytes())

    fit_a = tmp_path / "fit_a"
    B, fnames, rnames = io.read_coefficient_matrix(fit_a / "coefficients_model1.csv")
    copy = tmp_path / "rt_coef1.csv"
    io.write_coefficient_matrix(copy, B, fnames, rnames)
    checks.append((fit_a / "coefficients_model1.csv").read_bytes() == copy.read_bytes())

    g, fnames = io.read_coefficient_vector(fit_a / "coefficients_model2.csv")
    copy = tmp_path / "rt_coef2.csv"
    io.write_coefficient_vector(copy, g, fnames)
    checks.append((fit_a / "coefficients_model2.csv").read_bytes() == copy.read_bytes())

    cv_a = tmp_path / "cv_a"
    cells = io.read_cv_table(cv_a / "cv_table_model2.csv")
    copy = tmp_path / "rt_cv.csv"
    io.write_cv_table(copy, cells)
    checks.append((cv_a / "cv_table_model2.csv").read_bytes() == copy.read_bytes())

    parsed = io.read_config(cfg)
    copy = tmp_path / "rt_cfg.json"
    io.write_config(copy, parsed)
    checks.append(cfg.read_bytes() == copy.read_bytes())

    verdict(11, all(checks), f"{len(checks)} byte-identity checks")


def _method_means(result, keys):
    out = {}
    for method in ("joint", "separate"):
        rows = [r for r in result.rows if r["method"] == method and r["status"] == "ok"]
        assert len(rows) == 10, f"{method}: {len(rows)} ok rows"
        out[method] = {k: float(np.mean([r[k] for r in rows])) for k in keys}
    return out


def test_criterion_07_continuous_study():
    started = time.monotonic()
    result = run_study(StudyConfig(preset="LS1", overlap=1.0, reps=10, seed=0))
    elapsed = time.monotonic() - started
    means = _method_means(result, ("tpr_model2", "rrpe"))
    joint, sep = means["joint"], means["separate"]
    ok = (joint["tpr_model2"] >= 0.88
          and joint["tpr_model2"] > sep["tpr_model2"]
          and joint["rrpe"] >= sep["rrpe"]
          and elapsed <= 1800)
    verdict(7, ok, (f"joint TPR {joint['tpr_model2']:.3f} vs separate "
                    f"{sep['tpr_model2']:.3f}, joint RRPE {joint['rrpe']:.3f} vs "
                    f"{sep['rrpe']:.3f}, {elapsed:.0f}s"))


def test_criterion_08_survival_study():
    started = time.monotonic()
    result = run_study(StudyConfig(preset="S1", overlap=1.0, reps=10, seed=0))
    elapsed = time.monotonic() - started
    means = _method_means(result, ("tpr_model2", "auc_t12", "censoring_rate"))
    joint, sep = means["joint"], means["separate"]
    rates = [r["censoring_rate"] for r in result.rows if r["status"] == "ok"]
    censor_ok = all(0.15 <= c <= 0.25 for c in rates)
    ok = (joint["tpr_model2"] >= 0.88
          and censor_ok
          and joint["auc_t12"] >= sep["auc_t12"]
          and elapsed <= 2700)
    verdict(8, ok, (f"joint TPR {joint['tpr_model2']:.3f}, censoring "
                    f"{joint['censoring_rate']:.3f}, joint AUC@12 {joint['auc_t12']:.3f} "
                    f"vs separate {sep['auc_t12']:.3f}, {elapsed:.0f}s"))
