import logging

import numpy as np
import pytest

from jointsgl import (
    ContinuousOutcome,
    GroupStructure,
    InvalidInputError,
    PenaltyWeights,
    PredictorMatrix,
    SolverConfig,
    SurvivalOutcome,
    cv_grid_search,
    default_grid,
    lambda_max,
    make_folds,
)
from jointsgl.tuning import GROUP_RATIOS, CvCell

from conftest import random_survival


def test_make_folds_sizes_and_partition():
    folds = make_folds(7, 5, seed=0)
    assert sorted(len(f) for f in folds) == [1, 1, 1, 2, 2]
    # largest folds come first under the round-robin deal
    assert [len(f) for f in folds] == [2, 2, 1, 1, 1]
    combined = np.sort(np.concatenate(folds))
    assert np.array_equal(combined, np.arange(7))


def test_make_folds_seeded():
    a = make_folds(20, 4, seed=7)
    b = make_folds(20, 4, seed=7)
    c = make_folds(20, 4, seed=8)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


def test_make_folds_stratifies_events():
    event = np.zeros(20, dtype=int)
    event[:5] = 1
    folds = make_folds(20, 5, seed=3, event=event)
    for fold in folds:
        assert event[fold].sum() == 1


def test_make_folds_too_few_events_warns(caplog):
    event = np.zeros(12, dtype=int)
    event[0] = 1
    with caplog.at_level(logging.WARNING):
        folds = make_folds(12, 4, seed=0, event=event)
    assert any("stratification" in r.message for r in caplog.records)
    combined = np.sort(np.concatenate(folds))
    assert np.array_equal(combined, np.arange(12))


def test_make_folds_validation():
    with pytest.raises(InvalidInputError):
        make_folds(5, 1, seed=0)
    with pytest.raises(InvalidInputError):
        make_folds(3, 4, seed=0)
    with pytest.raises(InvalidInputError):
        make_folds(6, 3, seed=0, event=np.zeros(5, dtype=int))


def test_lambda_max_zeroes_everything(rng, groups_p6):
    X = PredictorMatrix(rng.normal(size=(40, 6)), tuple(f"x{j}" for j in range(6)))
    z = ContinuousOutcome(rng.normal(size=40))
    weights = PenaltyWeights.unit(6, 2)
    cfg = SolverConfig(alpha=1.0)
    top = lambda_max(X, z, weights, cfg)
    from jointsgl import fit_model2_linear

    fit = fit_model2_linear(X, z, groups_p6, weights,
                            SolverConfig(lambda_feature=top, alpha=1.0))
    assert np.all(fit.coefficients.values == 0.0)
    # just below the bound at least one coefficient survives
    fit2 = fit_model2_linear(X, z, groups_p6, weights,
                             SolverConfig(lambda_feature=top * 0.95, alpha=1.0))
    assert np.any(fit2.coefficients.values != 0.0)


def test_lambda_max_respects_weights(rng):
    X = PredictorMatrix(rng.normal(size=(30, 4)), tuple(f"x{j}" for j in range(4)))
    z = ContinuousOutcome(rng.normal(size=30))
    unit = PenaltyWeights.unit(4, 1)
    cfg = SolverConfig(alpha=1.0)
    base = lambda_max(X, z, unit, cfg)
    # halving one feature's weight doubles its threshold entry
    fw = np.ones(4)
    fw[np.argmax(np.abs(X.values.T @ z.values))] = 0.5
    skew = PenaltyWeights(fw / fw.mean(), np.ones(1))
    assert lambda_max(X, z, skew, cfg) > base
    # alpha = 0 removes the weight effect entirely
    cfg0 = SolverConfig(alpha=0.0)
    assert np.isclose(lambda_max(X, z, skew, cfg0), lambda_max(X, z, unit, cfg0))


def test_lambda_max_rejects_zero_response(rng):
    X = PredictorMatrix(rng.normal(size=(10, 2)), ("a", "b"))
    with pytest.raises(InvalidInputError):
        lambda_max(X, np.zeros(10), PenaltyWeights.unit(2, 1), SolverConfig())


def test_default_grid_shape(rng, groups_p6):
    X = PredictorMatrix(rng.normal(size=(30, 6)), tuple(f"x{j}" for j in range(6)))
    z = ContinuousOutcome(rng.normal(size=30))
    weights = PenaltyWeights.unit(6, 2)
    grid = default_grid(X, z, groups_p6, weights, size=5)
    assert len(grid) == 5 * len(GROUP_RATIOS) == 15
    feats = sorted({lf for lf, _ in grid}, reverse=True)
    assert len(feats) == 5
    assert np.isclose(feats[-1], feats[0] / 100.0)
    for lf, lg in grid:
        assert any(np.isclose(lg, r * lf) for r in GROUP_RATIOS)
    single = default_grid(X, z, groups_p6, weights, size=1)
    assert len(single) == 3
    with pytest.raises(InvalidInputError):
        default_grid(X, z, groups_p6, weights, size=0)


def test_cv_recovers_signal_scale(rng, groups_p6):
    # strong signal: CV must not pick the all-zero top of the grid
    X = PredictorMatrix(rng.normal(size=(60, 6)), tuple(f"x{j}" for j in range(6)))
    z = ContinuousOutcome(X.values @ np.array([2.0, 0, 0, -2.0, 0, 0])
                          + 0.1 * rng.normal(size=60))
    weights = PenaltyWeights.unit(6, 2)
    grid = default_grid(X, z, groups_p6, weights, size=4)
    (lf, lg), cells = cv_grid_search(X, z, groups_p6, weights, grid, k=5, seed=0)
    top = max(c.lambda_feature for c in cells)
    assert lf < top
    best = min(c.mean_error for c in cells)
    chosen = [c for c in cells if c.lambda_feature == lf and c.lambda_group == lg]
    assert chosen[0].mean_error == best


def test_cv_prefers_sparser_on_ties(rng, groups_p6):
    X = PredictorMatrix(rng.normal(size=(20, 6)), tuple(f"x{j}" for j in range(6)))
    z = ContinuousOutcome(rng.normal(size=20))
    weights = PenaltyWeights.unit(6, 2)
    # two grid points far above lambda_max: both fits are all-zero, equal error
    top = lambda_max(X, z, weights, SolverConfig())
    grid = [(top * 10, 0.0), (top * 20, 0.0)]
    (lf, lg), cells = cv_grid_search(X, z, groups_p6, weights, grid, k=4, seed=0)
    assert lf == top * 20
    assert cells[0].mean_error == cells[1].mean_error


def test_cv_survival_scores_are_finite(rng, groups_p6):
    X, surv = random_survival(rng, n=40, p=6, censor=0.2)
    weights = PenaltyWeights.unit(6, 2)
    grid = default_grid(X, surv, groups_p6, weights, size=2)
    (lf, lg), cells = cv_grid_search(X, surv, groups_p6, weights, grid, k=4, seed=1)
    assert len(cells) == 6
    for cell in cells:
        assert len(cell.fold_errors) == 4
        assert np.isfinite(cell.mean_error)
        assert np.isclose(cell.mean_error, np.mean(cell.fold_errors))
    assert (lf, lg) in [(c.lambda_feature, c.lambda_group) for c in cells]


def test_concordance_error_hand_cases():
    from jointsgl.tuning import _concordance_error

    time = np.array([1.0, 2.0, 3.0])
    event = np.array([1, 1, 0])
    assert _concordance_error(np.array([3.0, 2.0, 1.0]), time, event) == 0.0
    assert _concordance_error(np.array([1.0, 2.0, 3.0]), time, event) == 1.0
    # all risks equal: every pair counts one half
    assert _concordance_error(np.zeros(3), time, event) == 0.5
    # lone event at the latest time: nothing comparable
    assert _concordance_error(np.array([1.0, 2.0]), np.array([2.0, 1.0]),
                              np.array([1, 0])) == 0.5


def test_cv_concordance_scores_bounded(rng, groups_p6):
    X, surv = random_survival(rng, n=40, p=6, censor=0.2)
    weights = PenaltyWeights.unit(6, 2)
    grid = default_grid(X, surv, groups_p6, weights, size=2)
    _, cells = cv_grid_search(X, surv, groups_p6, weights, grid, k=4, seed=1,
                              survival_score="concordance")
    for cell in cells:
        assert all(0.0 <= e <= 1.0 for e in cell.fold_errors)
    with pytest.raises(InvalidInputError):
        cv_grid_search(X, surv, groups_p6, weights, grid, k=4, survival_score="auc")


def test_cv_table_mean_matches_folds(rng, groups_p6):
    X = PredictorMatrix(rng.normal(size=(25, 6)), tuple(f"x{j}" for j in range(6)))
    z = ContinuousOutcome(rng.normal(size=25))
    weights = PenaltyWeights.unit(6, 2)
    grid = [(0.5, 0.0), (0.1, 0.05)]
    _, cells = cv_grid_search(X, z, groups_p6, weights, grid, k=5, seed=2)
    for cell in cells:
        assert cell.mean_error == float(np.mean(cell.fold_errors))


def test_cv_empty_grid_rejected(rng, groups_p6):
    X = PredictorMatrix(rng.normal(size=(10, 6)), tuple(f"x{j}" for j in range(6)))
    z = ContinuousOutcome(rng.normal(size=10))
    with pytest.raises(InvalidInputError):
        cv_grid_search(X, z, groups_p6, PenaltyWeights.unit(6, 2), [], k=2)


def test_cvcell_is_plain_data():
    cell = CvCell(0.5, 0.1, (1.0, 2.0), 1.5)
    assert cell.lambda_feature == 0.5
    assert cell.fold_errors == (1.0, 2.0)
