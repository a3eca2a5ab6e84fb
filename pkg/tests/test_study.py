import math

import numpy as np
import pytest

from jointsgl import SolverError, io
from jointsgl.study import (
    StudyConfig,
    run_study,
    select_within_one_se,
    study_header,
    write_study_csv,
)
from jointsgl.tuning import CvCell

TINY_OVERRIDES = dict(p=12, q=6, x_group_count=3, y_group_count=2, n_important=4)


def tiny_config(preset="LS2", **kw):
    base = dict(
        preset=preset, overlap=1.0, reps=2, seed=5,
        model1_grid=1, model2_grid=2, folds=2, test_size=50,
        scenario_overrides=dict(TINY_OVERRIDES),
    )
    base.update(kw)
    return StudyConfig(**base)


def test_scenario_seeds_and_overrides():
    config = tiny_config(seed=40)
    sc0, sc1 = config.scenario(0), config.scenario(1)
    assert sc0.seed == 40 and sc1.seed == 41
    assert sc0.p == 12 and sc0.q == 6
    assert not sc0.survival


def test_joint_alpha_defaults():
    config = tiny_config()
    assert config.joint_alpha(survival=False) == 1.0
    assert config.joint_alpha(survival=True) == 2.0
    assert tiny_config(alpha=0.5).joint_alpha(survival=True) == 0.5


def test_run_study_continuous_shape():
    config = tiny_config()
    result = run_study(config)
    assert result.header == study_header(False, config.eval_times)
    assert len(result.rows) == 4
    keys = [(r["method"], r["replication"]) for r in result.rows]
    assert keys == [("joint", 0), ("joint", 1), ("separate", 0), ("separate", 1)]
    for row in result.rows:
        assert row["status"] == "ok"
        assert 0.0 <= row["tpr_model2"] <= 1.0
        assert "rrpe" in row
        assert "censoring_rate" not in row
        assert row["runtime_s"] > 0
        assert row["seed"] == 5 + row["replication"]


def test_run_study_survival_columns():
    config = tiny_config(preset="S2", eval_times=(6.0, 12.0))
    result = run_study(config)
    for row in result.rows:
        assert "auc_t6" in row and "auc_t12" in row
        assert 0.0 <= row["censoring_rate"] <= 1.0
        assert "rrpe" not in row


def test_mean_rows_average_ok_rows():
    config = tiny_config()
    result = run_study(config)
    means = result.mean_rows()
    assert [m["method"] for m in means] == ["joint", "separate"]
    joint_rows = [r for r in result.rows if r["method"] == "joint"]
    m = means[0]
    assert m["replication"] == "mean"
    assert m["status"] == "ok:2"
    assert m["tpr_model2"] == pytest.approx(
        np.mean([r["tpr_model2"] for r in joint_rows])
    )
    assert m["rrpe"] == pytest.approx(np.mean([r["rrpe"] for r in joint_rows]))


def test_run_study_is_deterministic_up_to_runtime():
    config = tiny_config()
    a = run_study(config)
    b = run_study(config)
    for ra, rb in zip(a.rows, b.rows):
        for key in a.header:
            if key == "runtime_s":
                continue
            va, vb = ra[key], rb[key]
            if isinstance(va, float) and math.isnan(va):
                assert math.isnan(vb)
            else:
                assert va == vb, key


def test_run_study_worker_pool_matches_serial():
    config = tiny_config()
    serial = run_study(config)
    pooled = run_study(tiny_config(workers=2))
    for rs, rp in zip(serial.rows, pooled.rows):
        assert rs["tpr_model2"] == rp["tpr_model2"]
        assert rs["lambda2_feature"] == rp["lambda2_feature"]


def test_write_study_csv_round_trips_values(tmp_path):
    config = tiny_config()
    result = run_study(config)
    path = tmp_path / "study.csv"
    write_study_csv(path, result)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(result.header)
    # per-replication rows plus one mean row per method
    assert len(lines) == 1 + len(result.rows) + 2
    assert lines[-2].split(",")[result.header.index("replication")] == "mean"
    first = dict(zip(result.header, lines[1].split(",")))
    row = result.rows[0]
    assert float(first["tpr_model2"]) == row["tpr_model2"]
    assert first["converged"] in ("0", "1")
    assert first["method"] == "joint"


def test_select_within_one_se_prefers_smallest_lambda_in_band():
    cells = (
        CvCell(1.0, 0.5, (0.9, 1.1), 1.0),
        CvCell(0.5, 0.0, (1.0, 1.1), 1.05),
        CvCell(0.2, 0.0, (1.2, 1.2), 1.2),
    )
    # SE of the best cell is 0.1, so the band reaches 1.1
    assert select_within_one_se(cells) == (0.5, 0.0)


def test_select_within_one_se_skips_failed_cells():
    cells = (
        CvCell(1.0, 0.0, (2.0, 2.0), 2.0),
        CvCell(0.5, 0.0, (float("inf"), 2.0), float("inf")),
    )
    assert select_within_one_se(cells) == (1.0, 0.0)
    with pytest.raises(SolverError):
        select_within_one_se((CvCell(1.0, 0.0, (float("inf"),), float("inf")),))


def test_select_within_one_se_single_fold():
    cells = (
        CvCell(1.0, 0.0, (2.0,), 2.0),
        CvCell(0.5, 0.0, (2.5,), 2.5),
    )
    # zero spread: only the minimum itself qualifies
    assert select_within_one_se(cells) == (1.0, 0.0)
