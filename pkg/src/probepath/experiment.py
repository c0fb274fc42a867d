"""Scenario files, the repeated with/without-planning benchmark, and result tables.

Scenario geometry is written in grid units and scaled to meters by
``unit_scale`` when a run starts; planner, execution and noise settings are
always meters, seconds and radians.
"""
from __future__ import annotations

import copy
import csv
import enum
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .geometry import Cuboid, Pose, vec3
from .kinematics import PRESETS, ArmModel
from .perception import (
    Marker,
    NoiseModel,
    TargetNotFound,
    approach_orientation,
    approach_point,
    observe_markers,
    select_target,
)
from .planner import PlannerConfig, PlanningError, plan_path
from .sim import (
    TOOL_DOWN,
    ExecutionConfig,
    FailureReason,
    RunResult,
    execute_reactive_baseline,
    execute_trajectory,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SEED_ENV = "APPRUSS_SEED"
AGGREGATE = "AGGREGATE"
CSV_HEADER = ["scenario", "condition", "success_rate_pct", "mean_moving_time_s", "n_success", "n_total"]


class ScenarioError(Exception):
    pass


class ParseError(ScenarioError):
    """The scenario file is not readable JSON of the expected shape."""


class ValidationError(ScenarioError):
    """A scenario value violates its invariant; ``field`` names the offending key."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class Condition(str, enum.Enum):
    WITH_PLANNING = "WithPlanning"
    WITHOUT_PLANNING = "WithoutPlanning"

    @property
    def stream(self) -> int:
        return 0 if self is Condition.WITH_PLANNING else 1


@dataclass(frozen=True)
class ArmSpec:
    preset: str = "ur5e"
    base_position: tuple[float, float, float] = (0.2, -0.4, 0.0)  # m
    base_orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def build(self) -> ArmModel:
        return PRESETS[self.preset](Pose(self.base_position, self.base_orientation))


@dataclass(frozen=True)
class Scenario:
    name: str
    source: np.ndarray  # grid units
    target: np.ndarray  # grid units
    unit_scale: float = 0.4  # m per grid unit
    markers: tuple[Marker, ...] = ()  # grid units; empty means one marker at target
    desired_marker_id: int = 0
    obstacles: tuple[Cuboid, ...] = ()  # grid units
    seed: int = 0
    repetitions: int = 10
    standoff: float = 0.02  # m
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    execution: ExecutionConfig = field(default_factory=ExecutionConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    arm: ArmSpec = field(default_factory=ArmSpec)

    def source_m(self) -> np.ndarray:
        return self.source * self.unit_scale

    def obstacles_m(self) -> list[Cuboid]:
        return [box.scaled(self.unit_scale) for box in self.obstacles]

    def markers_m(self) -> list[Marker]:
        markers = self.markers or (Marker(self.desired_marker_id, Pose(self.target)),)
        return [Marker(m.id, Pose(m.true_pose.position * self.unit_scale, m.true_pose.orientation))
                for m in markers]


@dataclass(frozen=True)
class MetricsRow:
    scenario_name: str
    condition: Condition
    n_success: int
    n_total: int
    mean_moving_time: float | None  # s, successful runs only

    @property
    def success_rate(self) -> float:
        return 100.0 * self.n_success / self.n_total


# -----------------------------------------------------------------------------
# Loading


def _require(ok: bool, name: str, message: str) -> None:
    if not ok:
        raise ValidationError(name, message)


def _vector(raw: Any, name: str, n: int = 3) -> tuple[float, ...]:
    _require(isinstance(raw, (list, tuple)) and len(raw) == n, name, f"expected a list of {n} numbers")
    try:
        out = tuple(float(x) for x in raw)
    except (TypeError, ValueError):
        raise ValidationError(name, f"expected a list of {n} numbers") from None
    _require(all(math.isfinite(x) for x in out), name, "components must be finite")
    return out


def _config(cls, raw: Any, name: str, convert=None):
    """Build a config dataclass from a JSON object, rejecting unknown keys."""
    if raw is None:
        return cls()
    _require(isinstance(raw, dict), name, "expected an object")
    known = {f.name for f in fields(cls)}
    for key in raw:
        _require(key in known, f"{name}.{key}", "unknown field")
    kwargs = dict(raw)
    if convert:
        kwargs = convert(kwargs)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        bad = next((k for k in kwargs if k in str(exc)), None)
        raise ValidationError(f"{name}.{bad}" if bad else name, str(exc)) from None


def _cuboid(raw: Any, name: str) -> Cuboid:
    _require(isinstance(raw, dict), name, "expected an object with center and half_extents")
    center = _vector(raw.get("center"), f"{name}.center")
    half = _vector(raw.get("half_extents"), f"{name}.half_extents")
    _require(all(h > 0 for h in half), f"{name}.half_extents", "must be > 0")
    return Cuboid(center, half)


def _marker(raw: Any, name: str) -> Marker:
    _require(isinstance(raw, dict) and "id" in raw, name, "expected an object with id and position")
    _require(isinstance(raw["id"], int), f"{name}.id", "must be an integer")
    pos = _vector(raw.get("position"), f"{name}.position")
    quat = _vector(raw.get("orientation", [1.0, 0.0, 0.0, 0.0]), f"{name}.orientation", 4)
    norm = math.sqrt(sum(c * c for c in quat))
    _require(norm > 0, f"{name}.orientation", "zero quaternion")
    quat = np.array(quat)
    # leave already-unit input untouched so files round-trip exactly
    if abs(norm - 1.0) > 1e-12:
        quat = quat / norm
    return Marker(raw["id"], Pose(pos, quat))


def _planner(kwargs: dict) -> dict:
    if "workspace" in kwargs:
        kwargs["workspace"] = _cuboid(kwargs["workspace"], "planner.workspace")
    return kwargs


def _arm(kwargs: dict) -> dict:
    if "preset" in kwargs:
        _require(kwargs["preset"] in PRESETS, "arm.preset", f"unknown preset, choose from {sorted(PRESETS)}")
    if "base_position" in kwargs:
        kwargs["base_position"] = _vector(kwargs["base_position"], "arm.base_position")
    if "base_orientation" in kwargs:
        q = _vector(kwargs["base_orientation"], "arm.base_orientation", 4)
        norm = math.sqrt(sum(c * c for c in q))
        _require(norm > 0, "arm.base_orientation", "zero quaternion")
        kwargs["base_orientation"] = tuple(c / norm for c in q)
    return kwargs


_SCENARIO_KEYS = {"schema", "name", "unit_scale", "source", "target", "markers", "desired_marker_id",
                  "obstacles", "seed", "repetitions", "standoff", "planner", "execution", "noise", "arm"}


def scenario_from_dict(raw: Any, default_name: str = "scenario") -> Scenario:
    if not isinstance(raw, dict):
        raise ParseError("a scenario must be a JSON object")
    for key in raw:
        _require(key in _SCENARIO_KEYS, key, "unknown field")
    _require(raw.get("schema", SCHEMA_VERSION) == SCHEMA_VERSION, "schema",
             f"unsupported schema version (expected {SCHEMA_VERSION})")
    for key in ("source", "target"):
        _require(key in raw, key, "required")
    source = np.array(_vector(raw["source"], "source"))
    target = np.array(_vector(raw["target"], "target"))
    _require(not np.array_equal(source, target), "target", "must differ from source")

    def number(key, default, cast=float):
        value = raw.get(key, default)
        _require(isinstance(value, (int, float)) and not isinstance(value, bool), key, "must be a number")
        _require(cast is float or float(value).is_integer(), key, "must be an integer")
        return cast(value)

    unit_scale = number("unit_scale", 0.4)
    _require(unit_scale > 0, "unit_scale", "must be > 0")
    repetitions = number("repetitions", 10, int)
    _require(repetitions >= 1, "repetitions", "must be >= 1")
    standoff = number("standoff", 0.02)
    _require(standoff >= 0, "standoff", "must be >= 0")

    obstacles = raw.get("obstacles", [])
    _require(isinstance(obstacles, list), "obstacles", "expected a list")
    markers = raw.get("markers", [])
    _require(isinstance(markers, list), "markers", "expected a list")
    marker_objs = tuple(_marker(m, f"markers[{i}]") for i, m in enumerate(markers))
    ids = [m.id for m in marker_objs]
    _require(len(set(ids)) == len(ids), "markers", "marker ids must be unique")

    name = raw.get("name", default_name)
    _require(isinstance(name, str) and name != AGGREGATE, "name", "must be a string other than AGGREGATE")
    seed_env = os.environ.get(SEED_ENV)
    seed = number("seed", 0, int)
    if seed_env is not None:
        try:
            seed = int(seed_env)
        except ValueError:
            raise ValidationError(SEED_ENV, f"not an integer: {seed_env!r}") from None

    return Scenario(
        name=name,
        source=source,
        target=target,
        unit_scale=unit_scale,
        markers=marker_objs,
        desired_marker_id=number("desired_marker_id", 0, int),
        obstacles=tuple(_cuboid(o, f"obstacles[{i}]") for i, o in enumerate(obstacles)),
        seed=seed,
        repetitions=repetitions,
        standoff=standoff,
        planner=_config(PlannerConfig, raw.get("planner"), "planner", _planner),
        execution=_config(ExecutionConfig, raw.get("execution"), "execution"),
        noise=_config(NoiseModel, raw.get("noise"), "noise"),
        arm=_config(ArmSpec, raw.get("arm"), "arm", _arm),
    )


def _read_json(path: Path) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None


def load_scenario(path: str | os.PathLike) -> Scenario:
    """Read and validate one scenario file, filling defaults.

    ``$APPRUSS_SEED``, when set, replaces the file's seed.
    """
    path = Path(path)
    return scenario_from_dict(_read_json(path), default_name=path.stem)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_suite(path: str | os.PathLike) -> list[Scenario]:
    """Load scenarios from a suite file, a single scenario file, or a directory.

    A suite file holds ``{"schema": 1, "defaults": {...}, "scenarios": [...]}``;
    each entry is an inline scenario object (deep-merged over ``defaults``) or
    a path relative to the suite file.  A directory loads every ``*.json``
    inside it in name order.
    """
    path = Path(path)
    if path.is_dir():
        out: list[Scenario] = []
        for child in sorted(path.glob("*.json")):
            out.extend(load_suite(child))
        return out
    raw = _read_json(path)
    if not (isinstance(raw, dict) and "scenarios" in raw):
        return [scenario_from_dict(raw, default_name=path.stem)]
    for key in raw:
        _require(key in {"schema", "name", "defaults", "scenarios"}, key, "unknown suite field")
    _require(raw.get("schema", SCHEMA_VERSION) == SCHEMA_VERSION, "schema", "unsupported schema version")
    defaults = raw.get("defaults", {})
    _require(isinstance(defaults, dict), "defaults", "expected an object")
    _require(isinstance(raw["scenarios"], list), "scenarios", "expected a list")
    out = []
    for i, entry in enumerate(raw["scenarios"]):
        if isinstance(entry, str):
            entry = _read_json(path.parent / entry)
        if not isinstance(entry, dict):
            raise ParseError(f"scenarios[{i}] must be an object or a file name")
        out.append(scenario_from_dict(_merge(defaults, entry), default_name=f"{path.stem}_{i}"))
    return out


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of :func:`scenario_from_dict` (all defaults spelled out)."""
    def cuboid(c: Cuboid) -> dict:
        return {"center": c.center.tolist(), "half_extents": c.half_extents.tolist()}

    planner = asdict(replace(s.planner, workspace=None))
    planner["workspace"] = cuboid(s.planner.workspace)
    return {
        "schema": SCHEMA_VERSION,
        "name": s.name,
        "unit_scale": s.unit_scale,
        "source": s.source.tolist(),
        "target": s.target.tolist(),
        "markers": [{"id": m.id, "position": m.true_pose.position.tolist(),
                     "orientation": m.true_pose.orientation.tolist()} for m in s.markers],
        "desired_marker_id": s.desired_marker_id,
        "obstacles": [cuboid(c) for c in s.obstacles],
        "seed": s.seed,
        "repetitions": s.repetitions,
        "standoff": s.standoff,
        "planner": planner,
        "execution": asdict(s.execution),
        "noise": asdict(s.noise),
        "arm": {"preset": s.arm.preset, "base_position": list(s.arm.base_position),
                "base_orientation": list(s.arm.base_orientation)},
    }


# -----------------------------------------------------------------------------
# Running


def run_seed(seed: int, condition: Condition, repetition: int) -> np.random.SeedSequence:
    """RNG stream of one repetition; conditions never share a stream."""
    return np.random.SeedSequence([seed, condition.stream, repetition])


def run_once(scenario: Scenario, condition: Condition, repetition: int, arm: ArmModel | None = None,
             seed: int | None = None) -> RunResult:
    """One perception -> (plan) -> execute repetition.  Never raises on run failure."""
    arm = arm or scenario.arm.build()
    ss = run_seed(scenario.seed if seed is None else seed, condition, repetition)
    perception_ss, execution_ss = ss.spawn(2)

    observations = observe_markers(scenario.markers_m(), scenario.noise, perception_ss)
    try:
        target = select_target(observations, scenario.desired_marker_id)
    except TargetNotFound:
        return RunResult(False, 0.0, FailureReason.PERCEPTION_FAILURE)
    goal = approach_point(target, scenario.standoff)
    goal_quat = approach_orientation(target)
    source = scenario.source_m()
    obstacles = scenario.obstacles_m()

    if condition is Condition.WITHOUT_PLANNING:
        return execute_reactive_baseline(source, goal, arm, obstacles, scenario.execution, execution_ss,
                                         quat=TOOL_DOWN, goal_quat=goal_quat)
    try:
        plan = plan_path(source, goal, obstacles, scenario.planner)
    except PlanningError as exc:
        log.debug("%s rep %d: %s", scenario.name, repetition, exc)
        return RunResult(False, 0.0, FailureReason.PLANNING_FAILURE)
    return execute_trajectory(plan.curve, arm, obstacles, scenario.execution, execution_ss,
                              start_quat=TOOL_DOWN, goal_quat=goal_quat)


def summarize(name: str, condition: Condition, results: Sequence[RunResult]) -> MetricsRow:
    times = [r.moving_time for r in results if r.success]
    mean = math.fsum(times) / len(times) if times else None
    return MetricsRow(name, condition, len(times), len(results), mean)


def aggregate(rows: Sequence[MetricsRow], condition: Condition) -> MetricsRow:
    rows = [r for r in rows if r.condition is condition]
    n_success = sum(r.n_success for r in rows)
    n_total = sum(r.n_total for r in rows)
    weighted = [r.mean_moving_time * r.n_success for r in rows if r.n_success]
    mean = math.fsum(weighted) / n_success if n_success else None
    return MetricsRow(AGGREGATE, condition, n_success, n_total, mean)


def run_benchmark(scenarios: Iterable[Scenario], repetitions: int | None = None,
                  conditions: Sequence[Condition] = tuple(Condition),
                  with_aggregate: bool = True) -> list[MetricsRow]:
    """Run every scenario under every condition and aggregate per row.

    ``repetitions`` overrides each scenario's own count.  Rows come out in
    scenario order, WithPlanning first, followed by one ``AGGREGATE`` row per
    condition.
    """
    rows: list[MetricsRow] = []
    for scenario in scenarios:
        arm = scenario.arm.build()
        reps = scenario.repetitions if repetitions is None else repetitions
        for condition in conditions:
            results = [run_once(scenario, condition, i, arm) for i in range(reps)]
            row = summarize(scenario.name, condition, results)
            log.info("%s %s: %d/%d", scenario.name, condition.value, row.n_success, row.n_total)
            rows.append(row)
    if with_aggregate and rows:
        rows.extend(aggregate(rows, c) for c in conditions)
    return rows


# -----------------------------------------------------------------------------
# Output


def _fmt_float(x: float) -> str:
    return repr(float(x))


def emit_results(rows: Sequence[MetricsRow], format: str = "csv") -> str:
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.scenario_name, r.condition.value, _fmt_float(r.success_rate),
                        "" if r.mean_moving_time is None else _fmt_float(r.mean_moving_time),
                        r.n_success, r.n_total])
        return buf.getvalue()
    if format == "table":
        return _table(rows)
    raise ValueError(f"unknown format {format!r}")


def _cell(r: MetricsRow | None) -> str:
    if r is None:
        return "-"
    t = "-" if r.mean_moving_time is None else f"{r.mean_moving_time:.1f}s"
    return f"{r.success_rate:.0f}%/{t}"


def _table(rows: Sequence[MetricsRow]) -> str:
    names: list[str] = []
    cells: dict[tuple[str, Condition], MetricsRow] = {}
    for r in rows:
        if r.scenario_name not in names:
            names.append(r.scenario_name)
        cells[(r.scenario_name, r.condition)] = r
    header = ["", "With Planning", "Without Planning"]
    body = [[n, _cell(cells.get((n, Condition.WITH_PLANNING))),
             _cell(cells.get((n, Condition.WITHOUT_PLANNING)))] for n in names]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(3)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in [header] + body]
    lines.append("")
    lines.append("success rate / mean moving time; times average successful runs only")
    return "\n".join(lines) + "\n"


def parse_results(text: str) -> list[MetricsRow]:
    """Read rows back from :func:`emit_results` CSV output."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise ParseError(f"unexpected header {header}")
    rows = []
    for rec in reader:
        name, cond, _rate, mean, n_success, n_total = rec
        rows.append(MetricsRow(name, Condition(cond), int(n_success), int(n_total),
                               float(mean) if mean else None))
    return rows
