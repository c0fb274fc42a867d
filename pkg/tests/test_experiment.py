import json
import math
from pathlib import Path

import numpy as np
import pytest

from probepath.experiment import (
    AGGREGATE,
    CSV_HEADER,
    SEED_ENV,
    Condition,
    MetricsRow,
    ParseError,
    ValidationError,
    aggregate,
    emit_results,
    load_scenario,
    load_suite,
    parse_results,
    run_benchmark,
    run_once,
    scenario_from_dict,
    scenario_to_dict,
)
from probepath.planner import PlannerConfig
from probepath.sim import ExecutionConfig, FailureReason

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
MINIMAL = {"source": [1, 0, 0], "target": [0, 0, 1]}


@pytest.fixture(autouse=True)
def no_seed_override(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def write(tmp_path, obj, name="s.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


# --- loading -----------------------------------------------------------------

def test_minimal_file_gets_defaults(tmp_path):
    s = load_scenario(write(tmp_path, MINIMAL))
    assert s.name == "s" and s.seed == 0 and s.repetitions == 10 and s.unit_scale == 0.4
    assert s.planner == PlannerConfig() and s.execution == ExecutionConfig()
    np.testing.assert_allclose(s.source_m(), [0.4, 0, 0])
    markers = s.markers_m()
    assert [m.id for m in markers] == [0]
    np.testing.assert_allclose(markers[0].true_pose.position, [0, 0, 0.4])


def test_zero_repetitions_names_field(tmp_path):
    with pytest.raises(ValidationError) as info:
        load_scenario(write(tmp_path, {**MINIMAL, "repetitions": 0}))
    assert info.value.field == "repetitions"


@pytest.mark.parametrize("patch,field", [
    ({"source": [1, 0]}, "source"),
    ({"target": [1, 0, 0]}, "target"),
    ({"unit_scale": 0}, "unit_scale"),
    ({"standoff": -0.1}, "standoff"),
    ({"colour": "red"}, "colour"),
    ({"schema": 2}, "schema"),
    ({"planner": {"clearance": -1}}, "planner"),
    ({"obstacles": [{"center": [0, 0, 0], "half_extents": [0, 1, 1]}]}, "obstacles[0]"),
    ({"markers": [{"id": 1, "position": [0, 0, 0]}, {"id": 1, "position": [1, 0, 0]}]}, "markers"),
])
def test_invalid_fields(patch, field):
    with pytest.raises(ValidationError) as info:
        scenario_from_dict({**MINIMAL, **patch})
    assert info.value.field.startswith(field)


def test_missing_source():
    with pytest.raises(ValidationError) as info:
        scenario_from_dict({"target": [0, 0, 1]})
    assert info.value.field == "source"


def test_malformed_json(tmp_path):
    with pytest.raises(ParseError):
        load_scenario(write(tmp_path, '{"source": [1, 0, 0], '))


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_scenario(tmp_path / "absent.json")


def test_two_box_example_file():
    s = load_scenario(SCENARIOS / "paper_fig5.json")
    assert s.seed == 5 and s.planner.clearance == 0.015
    np.testing.assert_allclose(s.obstacles_m()[0].center, [0.36, 0.04, 0.0])
    np.testing.assert_allclose(s.obstacles_m()[0].half_extents, [0.02, 0.02, 0.02])


def test_suite_file_merges_defaults():
    suite = load_suite(SCENARIOS / "suite_table1.json")
    assert [s.name for s in suite] == ["No Obstacles"] + [f"Obstacle #{i}" for i in range(1, 6)]
    assert all(s.repetitions == 10 and s.arm.base_position == (0.2, -0.4, 0.0) for s in suite)
    assert len(suite[0].obstacles) == 0 and all(len(s.obstacles) == 2 for s in suite[1:])


def test_directory_loads_every_file():
    names = [s.name for s in load_suite(SCENARIOS)]
    assert "two_box_gate" in names and "multi_marker" in names and "No Obstacles" in names


def test_round_trip(tmp_path):
    s = load_scenario(SCENARIOS / "multi_marker.json")
    again = scenario_from_dict(scenario_to_dict(s))
    assert scenario_to_dict(again) == scenario_to_dict(s)


def test_seed_override(monkeypatch, tmp_path):
    path = write(tmp_path, {**MINIMAL, "seed": 3})
    monkeypatch.setenv(SEED_ENV, "77")
    assert load_scenario(path).seed == 77
    monkeypatch.setenv(SEED_ENV, "seven")
    with pytest.raises(ValidationError):
        load_scenario(path)


# --- running -----------------------------------------------------------------

def test_unobstructed_always_succeeds():
    s = scenario_from_dict({**MINIMAL, "repetitions": 4})
    rows = run_benchmark([s])
    assert [r.success_rate for r in rows] == [100.0] * 4
    assert rows[-2].scenario_name == AGGREGATE


def test_unreachable_always_fails():
    s = scenario_from_dict({"source": [1, 0, 0], "target": [10, 0, 0], "repetitions": 3})
    rows = run_benchmark([s], with_aggregate=False)
    assert [(r.n_success, r.n_total, r.mean_moving_time) for r in rows] == [(0, 3, None)] * 2
    assert run_once(s, Condition.WITH_PLANNING, 0).failure_reason is FailureReason.PLANNING_FAILURE
    assert run_once(s, Condition.WITHOUT_PLANNING, 0).failure_reason is FailureReason.RANGE_OF_MOTION


def test_missing_marker_is_perception_failure():
    s = scenario_from_dict({**MINIMAL, "desired_marker_id": 4, "markers": [{"id": 5, "position": [0, 0, 1]}]})
    for c in Condition:
        r = run_once(s, c, 0)
        assert r.failure_reason is FailureReason.PERCEPTION_FAILURE and r.moving_time == 0.0


def test_reproducible():
    s = load_scenario(SCENARIOS / "paper_fig5.json")
    assert run_benchmark([s], repetitions=3) == run_benchmark([s], repetitions=3)


def test_conditions_use_independent_streams():
    s = load_scenario(SCENARIOS / "paper_fig5.json")
    both = run_benchmark([s], repetitions=3, with_aggregate=False)
    alone = run_benchmark([s], repetitions=3, conditions=(Condition.WITHOUT_PLANNING,), with_aggregate=False)
    assert both[1] == alone[0]


def test_aggregate_weights_by_successes():
    rows = [MetricsRow("a", Condition.WITH_PLANNING, 1, 2, 10.0),
            MetricsRow("b", Condition.WITH_PLANNING, 3, 4, 20.0),
            MetricsRow("c", Condition.WITH_PLANNING, 0, 4, None)]
    agg = aggregate(rows, Condition.WITH_PLANNING)
    assert (agg.n_success, agg.n_total) == (4, 10) and agg.mean_moving_time == pytest.approx(17.5)


# --- output ------------------------------------------------------------------

def test_empty_csv_is_header_only():
    assert emit_results([]) == ",".join(CSV_HEADER) + "\n"


def test_csv_row_format():
    text = emit_results([MetricsRow("Obstacle #1", Condition.WITH_PLANNING, 9, 10, 15.25)])
    assert text.splitlines()[1] == "Obstacle #1,WithPlanning,90.0,15.25,9,10"


def test_csv_undefined_mean_is_empty():
    text = emit_results([MetricsRow("x", Condition.WITHOUT_PLANNING, 0, 5, None)])
    assert text.splitlines()[1] == "x,WithoutPlanning,0.0,,0,5"


def test_table_format():
    rows = [MetricsRow("Obstacle #1", Condition.WITH_PLANNING, 9, 10, 15.25),
            MetricsRow("Obstacle #1", Condition.WITHOUT_PLANNING, 0, 10, None)]
    text = emit_results(rows, "table")
    line = text.splitlines()[1]
    assert line.split() == ["Obstacle", "#1", "90%/15.2s", "0%/-"]


def test_unknown_format():
    with pytest.raises(ValueError):
        emit_results([], "xml")


def test_csv_round_trip():
    rows = [MetricsRow("a,b", Condition.WITH_PLANNING, 7, 10, 1 / 3),
            MetricsRow("c", Condition.WITHOUT_PLANNING, 0, 10, None)]
    back = parse_results(emit_results(rows))
    assert back == rows
    assert math.isclose(back[0].success_rate, 70.0)


def test_parse_rejects_bad_header():
    with pytest.raises(ParseError):
        parse_results("a,b\n")
