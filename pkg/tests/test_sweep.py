"""
Tests for parameter sweeps.
"""
# flake8: noqa: E501
# mypy: ignore-errors

import json

import pytest

from augmap.errors import ConfigError
from augmap.evaluation.metrics import ClassReport, EvalReport
from augmap.evaluation.sweep import SweepPoint, SweepResult, sweep
from augmap.schemas.domain import STATIC_CLASSES, ObjectClass
from augmap.simulation.scenarios import corridor_scenario


@pytest.fixture(scope="module")
def small_corridor():
    """Create a short corridor with two doors."""
    return corridor_scenario(n_doors=2, n_extinguishers=0, length=11.0)


def report(fp, fn, errors):
    classes = [ClassReport.build(c, errors if c == ObjectClass.DOOR else [], fp if c == ObjectClass.DOOR else 0, fn if c == ObjectClass.DOOR else 0) for c in STATIC_CLASSES]
    return EvalReport(radius=2.0, classes=classes, overall=ClassReport.build(None, errors, fp, fn))


def test_sweep_result_requires_order():
    """Test that points must be strictly ordered by (value, seed)."""
    a = SweepPoint(value=1.0, seed=0, report=report(0, 0, [0.1]))
    b = SweepPoint(value=0.9, seed=0, report=report(0, 0, [0.1]))
    with pytest.raises(ValueError):
        SweepResult(parameter="delta", points=[a, b])
    with pytest.raises(ValueError):
        SweepResult(parameter="delta", points=[a, a])


def test_summary_averages_over_seeds():
    """Test that summaries average rates over seeds and errors over seeds with matches."""
    points = [
        SweepPoint(value=0.9, seed=0, report=report(2, 0, [0.1, 0.3])),
        SweepPoint(value=0.9, seed=1, report=report(0, 2, [])),
        SweepPoint(value=1.5, seed=0, report=report(0, 1, [0.4])),
        SweepPoint(value=1.5, seed=1, report=report(0, 1, [0.4])),
    ]
    result = SweepResult(parameter="delta", points=points)
    assert result.values == [0.9, 1.5]
    first, second = result.summary(ObjectClass.DOOR)
    assert (first.runs, first.fp, first.fn) == (2, 1.0, 1.0)
    assert first.fp_rate == pytest.approx(0.5)
    assert first.avg_error == pytest.approx(0.2)
    assert second.fn_rate == pytest.approx(0.5)


def test_table_lists_reference_rates():
    """Test that door delta tables show the real-data reference rates beside each value."""
    points = [
        SweepPoint(value=0.9, seed=0, report=report(1, 0, [0.1])),
        SweepPoint(value=1.1, seed=0, report=report(0, 0, [0.1])),
    ]
    lines = SweepResult(parameter="delta", points=points).table().splitlines()
    assert "ref. FP %" in lines[0]
    assert lines[2].split()[-2:] == ["27.2", "0.0"]
    assert lines[3].split()[-2:] == ["-", "-"]
    plain = SweepResult(parameter="max_range", points=points).table()
    assert "ref." not in plain


def test_sweep_validation(small_corridor):
    """Test that bad parameters, value lists and seed counts raise ConfigError."""
    with pytest.raises(ConfigError):
        sweep(small_corridor, "speed", [1.0, 2.0])
    with pytest.raises(ConfigError):
        sweep(small_corridor, "delta", [1.0])
    with pytest.raises(ConfigError):
        sweep(small_corridor, "delta", [1.0, 1.0])
    with pytest.raises(ConfigError):
        sweep(small_corridor, "delta", [1.0, 1.2], seeds=0)
    with pytest.raises(ConfigError):
        sweep(small_corridor, "delta", [0.0, 1.2])
    with pytest.raises(ConfigError):
        sweep(small_corridor, "sigma_I", [-1.0, 5.0])


def test_delta_sweep_runs_every_value_and_seed(small_corridor):
    """Test that a tracker sweep returns one ordered point per value and seed."""
    result = sweep(small_corridor, "delta", [1.5, 0.9], seeds=2)
    assert [(p.value, p.seed) for p in result.points] == [(0.9, 0), (0.9, 1), (1.5, 0), (1.5, 1)]
    for p in result.points:
        assert p.report.for_class(ObjectClass.DOOR).fn == 0


def test_sensor_sweep_is_deterministic(small_corridor):
    """Test that sensor sweeps give equal JSON lines on repeated runs."""
    a = sweep(small_corridor, "sigma_I", [0.0, 10.0], seeds=1)
    b = sweep(small_corridor, "sigma_I", [0.0, 10.0], seeds=1)
    assert a.to_jsonl() == b.to_jsonl()
    records = [json.loads(line) for line in a.to_jsonl().splitlines()]
    assert [r["value"] for r in records] == [0.0, 10.0]
    assert all(r["parameter"] == "sigma_I" for r in records)


def test_parallel_sweep_matches_serial(small_corridor):
    """Test that worker processes do not change the result."""
    serial = sweep(small_corridor, "max_range", [3.0, 6.0], seeds=2)
    parallel = sweep(small_corridor, "max_range", [3.0, 6.0], seeds=2, workers=2)
    assert serial.to_jsonl() == parallel.to_jsonl()
