import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointsgl import GroupStructure, clamp_log, group_norms, unit_mean_weights
from jointsgl.weights import CLAMP_CEILING, CLAMP_FLOOR, weights_from_beta, weights_from_gamma


def test_clamp_log_pinned_values():
    assert clamp_log(np.array([1.0]))[0] == -0.01
    assert clamp_log(np.array([1e-4]))[0] == -2.0
    assert clamp_log(np.array([0.0]))[0] == -2.0
    # interior point passes through untouched
    assert np.isclose(clamp_log(np.array([0.1]))[0], -1.0)
    assert clamp_log(np.array([100.0]))[0] == CLAMP_CEILING
    assert clamp_log(np.array([1e-30]))[0] == CLAMP_FLOOR


def test_clamp_log_uses_magnitude():
    vals = clamp_log(np.array([-0.1, 0.1]))
    assert vals[0] == vals[1]


def test_unit_mean_weights_pinned_pair():
    w = unit_mean_weights(np.array([-0.01, -1.0]))
    assert np.allclose(w, [0.019802, 1.980198], atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(0, 10_000))
def test_unit_mean_weights_mean_one(size, seed):
    rng = np.random.default_rng(seed)
    clamped = clamp_log(rng.uniform(0.0, 2.0, size=size))
    w = unit_mean_weights(clamped)
    assert np.isclose(w.mean(), 1.0, atol=1e-12)
    assert np.all(w > 0)


def test_bigger_coefficients_get_smaller_weights():
    w = unit_mean_weights(clamp_log(np.array([0.9, 0.01])))
    assert w[0] < w[1]


def test_group_norms_shape_and_values(groups_p6):
    clamped = np.array([-0.01, -0.5, -1.0, -2.0, -2.0, -2.0])
    norms = group_norms(clamped, groups_p6)
    raw = np.array([np.sqrt(0.01**2 + 0.5**2 + 1.0**2), np.sqrt(3 * 4.0)])
    assert np.allclose(norms, raw / raw.mean())
    assert np.isclose(norms.mean(), 1.0)


def test_weights_from_gamma_normalizes_both_levels(groups_p6):
    gamma = np.array([0.5, 0.0, 0.0, 0.01, 0.2, 0.0])
    w = weights_from_gamma(gamma, groups_p6)
    assert np.isclose(w.feature_weights.mean(), 1.0)
    assert np.isclose(w.group_weights.mean(), 1.0)
    assert w.feature_weights[0] < w.feature_weights[1]


def test_weights_from_beta_uses_row_magnitude(groups_p6):
    beta = np.zeros((6, 3))
    beta[0] = (0.0, 0.9, 0.0)
    beta[3] = (1e-5, 0.0, 0.0)
    w_full = weights_from_beta(beta, groups_p6)
    # row max drives the weight: feature 0 looks strong, feature 3 negligible
    assert w_full.feature_weights[0] < w_full.feature_weights[3]
    only_max = np.zeros((6, 3))
    only_max[np.arange(6), 0] = np.abs(beta).max(axis=1)
    w_rowmax = weights_from_beta(only_max, groups_p6)
    assert np.allclose(w_full.feature_weights, w_rowmax.feature_weights)


def test_all_zero_coefficients_give_unit_weights(groups_p6):
    w = weights_from_gamma(np.zeros(6), groups_p6)
    assert np.allclose(w.feature_weights, 1.0)
    assert np.allclose(w.group_weights, 1.0)


def test_clamp_bounds_ordering():
    with pytest.raises(Exception):
        clamp_log(np.array([1.0]), ceiling=-3.0, floor=-2.0)
