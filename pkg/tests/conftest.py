import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from jointsgl import (
    BlockGroupStructure,
    GroupStructure,
    MultiResponse,
    PenaltyWeights,
    PredictorMatrix,
    SurvivalOutcome,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_instance(rng, n=30, p=10, q=4, overlapping=True):
    """Small model-1 problem with two (optionally overlapping) blocks."""
    X = PredictorMatrix(rng.normal(size=(n, p)), tuple(f"x{j}" for j in range(p)))
    Y = MultiResponse(rng.normal(size=(n, q)), tuple(f"y{k}" for k in range(q)))
    half = p // 2
    cells_a = tuple((j, k) for j in range(half + (1 if overlapping else 0))
                    for k in range(q))
    cells_b = tuple((j, k) for j in range(half, p) for k in range(q))
    blocks = BlockGroupStructure((("a", cells_a), ("b", cells_b)))
    return X, Y, blocks


def random_weights(rng, p, n_groups):
    fw = rng.uniform(0.2, 2.0, size=p)
    gw = rng.uniform(0.2, 2.0, size=n_groups)
    return PenaltyWeights(fw / fw.mean(), gw / gw.mean())


def random_survival(rng, n=40, p=6, censor=0.3):
    X = PredictorMatrix(rng.normal(size=(n, p)), tuple(f"x{j}" for j in range(p)))
    gamma = np.zeros(p)
    gamma[:2] = (0.8, -0.8)
    hazards = 0.2 * np.exp(X.values @ gamma)
    time = rng.exponential(1.0 / hazards)
    event = (rng.uniform(size=n) > censor).astype(int)
    if event.sum() == 0:
        event[0] = 1
    return X, SurvivalOutcome(time, event)


@pytest.fixture
def groups_p6():
    return GroupStructure((("g0", (0, 1, 2)), ("g1", (3, 4, 5))))
