"""CSV/JSON artifacts: datasets, configs, coefficients, reports.

Real numbers are serialized with Python's shortest round-trip repr, so a
write -> read cycle restores every value bit for bit. CSV files carry a
header row, UTF-8, '.' decimals, independent of locale. Parse failures
raise DataFormatError tagged with file and line number.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import (
    CoefficientMatrix,
    CoefficientVector,
    ContinuousOutcome,
    GroupStructure,
    MultiResponse,
    PredictorMatrix,
    SurvivalOutcome,
)
from .errors import DataFormatError
from .simgen import GroundTruth, SimulationScenario

CONFIG_SCHEMA_VERSION = 1


def format_real(value) -> str:
    return repr(float(value))


def _parse_real(text: str, path, line_no: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(f"{path}:{line_no}: not a number: {text!r}") from None


def _rows(path):
    """Yield (line_no, row) from a CSV file; raises on an empty file."""
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        got_any = False
        for line_no, row in enumerate(csv.reader(fh), start=1):
            got_any = True
            yield line_no, row
        if not got_any:
            raise DataFormatError(f"{path}:1: empty file")


def _open_writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_matrix_csv(path, values, columns) -> None:
    values = np.asarray(values, dtype=float)
    fh, writer = _open_writer(path)
    with fh:
        writer.writerow(columns)
        for row in values:
            writer.writerow([format_real(v) for v in row])


def read_matrix_csv(path) -> tuple[np.ndarray, tuple[str, ...]]:
    header = None
    data = []
    for line_no, row in _rows(path):
        if header is None:
            header = row
            continue
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}"
            )
        data.append([_parse_real(cell, path, line_no) for cell in row])
    if not data:
        raise DataFormatError(f"{path}:2: no data rows")
    return np.array(data, dtype=float), tuple(header)


def write_predictors(path, predictors: PredictorMatrix) -> None:
    write_matrix_csv(path, predictors.values, predictors.feature_names)


def read_predictors(path) -> PredictorMatrix:
    values, names = read_matrix_csv(path)
    return PredictorMatrix(values, names)


def write_responses(path, responses: MultiResponse) -> None:
    write_matrix_csv(path, responses.values, responses.response_names)


def read_responses(path) -> MultiResponse:
    values, names = read_matrix_csv(path)
    return MultiResponse(values, names)


def write_outcome(path, outcome) -> None:
    fh, writer = _open_writer(path)
    with fh:
        if isinstance(outcome, SurvivalOutcome):
            writer.writerow(["time", "event"])
            for t, e in zip(outcome.time, outcome.event):
                writer.writerow([format_real(t), str(int(e))])
        else:
            writer.writerow(["z"])
            for v in outcome.values:
                writer.writerow([format_real(v)])


def read_outcome(path):
    header = None
    z = []
    time = []
    event = []
    for line_no, row in _rows(path):
        if header is None:
            header = row
            if header not in (["z"], ["time", "event"]):
                raise DataFormatError(
                    f"{path}:1: outcome header must be 'z' or 'time,event', got {','.join(header)!r}"
                )
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}:{line_no}: expected {len(header)} fields")
        if header == ["z"]:
            z.append(_parse_real(row[0], path, line_no))
        else:
            time.append(_parse_real(row[0], path, line_no))
            if row[1] not in ("0", "1"):
                raise DataFormatError(f"{path}:{line_no}: event must be 0 or 1, got {row[1]!r}")
            event.append(int(row[1]))
    if header == ["z"]:
        if not z:
            raise DataFormatError(f"{path}:2: no data rows")
        return ContinuousOutcome(np.array(z))
    if not time:
        raise DataFormatError(f"{path}:2: no data rows")
    return SurvivalOutcome(np.array(time), np.array(event))


def write_groups(path, groups: GroupStructure, member_names) -> None:
    """One (group_name, member_name) row per membership; overlap-safe."""
    member_names = tuple(member_names)
    fh, writer = _open_writer(path)
    with fh:
        writer.writerow(["group", "feature"])
        for name, idx in groups.groups:
            for j in idx:
                writer.writerow([name, member_names[j]])


def read_groups(path, member_names) -> GroupStructure:
    index = {name: j for j, name in enumerate(member_names)}
    order: list[str] = []
    members: dict[str, list[int]] = {}
    header_seen = False
    for line_no, row in _rows(path):
        if not header_seen:
            header_seen = True
            if row != ["group", "feature"]:
                raise DataFormatError(f"{path}:1: expected header 'group,feature'")
            continue
        if len(row) != 2:
            raise DataFormatError(f"{path}:{line_no}: expected 2 fields, got {len(row)}")
        group, feature = row
        if feature not in index:
            raise DataFormatError(f"{path}:{line_no}: unknown feature {feature!r}")
        if group not in members:
            order.append(group)
            members[group] = []
        members[group].append(index[feature])
    if not order:
        raise DataFormatError(f"{path}:2: no group rows")
    return GroupStructure(tuple((g, tuple(sorted(set(members[g])))) for g in order))


def write_json(path, document) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"{path}: file not found")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{exc.lineno}: {exc.msg}") from None


def write_truth(path, truth: GroundTruth, feature_names, response_names) -> None:
    feature_names = tuple(feature_names)
    write_json(
        path,
        {
            "feature_names": list(feature_names),
            "response_names": list(response_names),
            "important_model1": [feature_names[j] for j in truth.important_model1],
            "important_model2": [feature_names[j] for j in truth.important_model2],
            "coefficients_model1": truth.B_true.values.tolist(),
            "coefficients_model2": truth.G_true.values.tolist(),
        },
    )


def read_truth(path) -> GroundTruth:
    doc = read_json(path)
    try:
        names = {name: j for j, name in enumerate(doc["feature_names"])}
        truth = GroundTruth(
            B_true=CoefficientMatrix(np.array(doc["coefficients_model1"], dtype=float)),
            G_true=CoefficientVector(np.array(doc["coefficients_model2"], dtype=float)),
            important_model1=tuple(names[f] for f in doc["important_model1"]),
            important_model2=tuple(names[f] for f in doc["important_model2"]),
        )
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing key {exc.args[0]!r}") from None
    return truth


def write_manifest(path, scenario: SimulationScenario, files) -> None:
    doc = dataclasses.asdict(scenario)
    doc["schema_version"] = CONFIG_SCHEMA_VERSION
    doc["files"] = sorted(files)
    write_json(path, doc)


def read_manifest(path) -> SimulationScenario:
    doc = read_json(path)
    doc.pop("schema_version", None)
    doc.pop("files", None)
    field_names = {f.name for f in dataclasses.fields(SimulationScenario)}
    unknown = set(doc) - field_names
    if unknown:
        raise DataFormatError(f"{path}: unknown manifest fields {sorted(unknown)}")
    return SimulationScenario(**doc)


def write_coefficient_matrix(path, coef: CoefficientMatrix, feature_names, response_names) -> None:
    fh, writer = _open_writer(path)
    with fh:
        writer.writerow(["feature", *response_names])
        for name, row in zip(feature_names, coef.values):
            writer.writerow([name, *(format_real(v) for v in row)])


def read_coefficient_matrix(path):
    header = None
    names = []
    data = []
    for line_no, row in _rows(path):
        if header is None:
            header = row
            if len(header) < 2 or header[0] != "feature":
                raise DataFormatError(f"{path}:1: expected header 'feature,<responses...>'")
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}:{line_no}: expected {len(header)} fields")
        names.append(row[0])
        data.append([_parse_real(cell, path, line_no) for cell in row[1:]])
    if not data:
        raise DataFormatError(f"{path}:2: no data rows")
    return CoefficientMatrix(np.array(data)), tuple(names), tuple(header[1:])


def write_coefficient_vector(path, coef: CoefficientVector, feature_names) -> None:
    fh, writer = _open_writer(path)
    with fh:
        writer.writerow(["feature", "value"])
        for name, v in zip(feature_names, coef.values):
            writer.writerow([name, format_real(v)])


def read_coefficient_vector(path):
    header = None
    names = []
    data = []
    for line_no, row in _rows(path):
        if header is None:
            header = row
            if header != ["feature", "value"]:
                raise DataFormatError(f"{path}:1: expected header 'feature,value'")
            continue
        if len(row) != 2:
            raise DataFormatError(f"{path}:{line_no}: expected 2 fields")
        names.append(row[0])
        data.append(_parse_real(row[1], path, line_no))
    if not data:
        raise DataFormatError(f"{path}:2: no data rows")
    return CoefficientVector(np.array(data)), tuple(names)


def write_cv_table(path, cells) -> None:
    """cells: CvCell sequence; every row carries the same fold count."""
    cells = tuple(cells)
    n_folds = len(cells[0].fold_errors) if cells else 0
    fh, writer = _open_writer(path)
    with fh:
        writer.writerow(
            ["lambda_feature", "lambda_group"]
            + [f"fold_error_{i + 1}" for i in range(n_folds)]
            + ["mean_error"]
        )
        for cell in cells:
            writer.writerow(
                [format_real(cell.lambda_feature), format_real(cell.lambda_group)]
                + [format_real(e) for e in cell.fold_errors]
                + [format_real(cell.mean_error)]
            )


def read_cv_table(path):
    from .tuning import CvCell

    header = None
    cells = []
    for line_no, row in _rows(path):
        if header is None:
            header = row
            if (
                len(header) < 3
                or header[:2] != ["lambda_feature", "lambda_group"]
                or header[-1] != "mean_error"
            ):
                raise DataFormatError(f"{path}:1: unexpected cv table header")
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}:{line_no}: expected {len(header)} fields")
        vals = [_parse_real(cell, path, line_no) for cell in row]
        cells.append(
            CvCell(
                lambda_feature=vals[0],
                lambda_group=vals[1],
                fold_errors=tuple(vals[2:-1]),
                mean_error=vals[-1],
            )
        )
    if not cells:
        raise DataFormatError(f"{path}:2: no data rows")
    return tuple(cells)


class FitConfig(NamedTuple):
    """Contents of a fit/cv config file, model-level lambdas split out."""

    alpha: float
    outcome: str
    lambda1_feature: float
    lambda1_group: float
    lambda2_feature: float
    lambda2_group: float
    overrides: dict


_CONFIG_OVERRIDE_KEYS = (
    "inner_tol",
    "outer_tol",
    "joint_tol",
    "max_inner_iter",
    "max_outer_iter",
    "max_joint_iter",
    "step_init",
    "step_shrink",
)


def write_config(path, config: FitConfig) -> None:
    doc = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "alpha": config.alpha,
        "outcome": config.outcome,
        "model1": {
            "lambda_feature": config.lambda1_feature,
            "lambda_group": config.lambda1_group,
        },
        "model2": {
            "lambda_feature": config.lambda2_feature,
            "lambda_group": config.lambda2_group,
        },
    }
    if config.overrides:
        doc["solver"] = dict(config.overrides)
    write_json(path, doc)


def read_config(path) -> FitConfig:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise DataFormatError(f"{path}: config must be a JSON object")
    version = doc.get("schema_version")
    if version != CONFIG_SCHEMA_VERSION:
        raise DataFormatError(f"{path}: unsupported schema_version {version!r}")
    outcome = doc.get("outcome", "continuous")
    if outcome not in ("continuous", "survival"):
        raise DataFormatError(f"{path}: outcome must be 'continuous' or 'survival'")

    def _lambdas(key):
        block = doc.get(key)
        if not isinstance(block, dict):
            raise DataFormatError(f"{path}: missing object {key!r}")
        try:
            return float(block["lambda_feature"]), float(block["lambda_group"])
        except (KeyError, TypeError, ValueError):
            raise DataFormatError(f"{path}: {key} needs numeric lambda_feature/lambda_group") from None

    lf1, lg1 = _lambdas("model1")
    lf2, lg2 = _lambdas("model2")
    overrides = doc.get("solver", {})
    if not isinstance(overrides, dict):
        raise DataFormatError(f"{path}: solver overrides must be an object")
    unknown = set(overrides) - set(_CONFIG_OVERRIDE_KEYS)
    if unknown:
        raise DataFormatError(f"{path}: unknown solver keys {sorted(unknown)}")
    try:
        alpha = float(doc.get("alpha", 1.0))
    except (TypeError, ValueError):
        raise DataFormatError(f"{path}: alpha must be numeric") from None
    return FitConfig(alpha, outcome, lf1, lg1, lf2, lg2, dict(overrides))
