"""Discrete-time execution of a path on the kinematic arm.

Randomness has two sources: Gaussian jitter on commanded interior waypoints
(actuation noise) and a uniform control delay per command.  Each run draws
from independent child streams of one seed, so changing one noise level
never reshuffles the draws of another.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .geometry import (
    UNBOUNDED,
    CubicBezier,
    Cuboid,
    Pose,
    bezier_sample_uniform,
    points_cuboid_distance,
    quat_to_rotation,
    rotation_to_quat,
    segment_points,
)
from .kinematics import ArmModel, IKError, forward_kinematics, inverse_kinematics
from .perception import FLIP_X
from .planner import straight_line_path

#: Sub-samples used when checking the straight move between two waypoints.
SEGMENT_SAMPLES = 20

TOOL_DOWN = FLIP_X


class FailureReason(str, enum.Enum):
    NONE = "None"
    COLLISION = "Collision"
    RANGE_OF_MOTION = "RangeOfMotion"
    TARGET_MISS = "TargetMiss"
    PERCEPTION_FAILURE = "PerceptionFailure"
    PLANNING_FAILURE = "PlanningFailure"


@dataclass(frozen=True)
class ExecutionConfig:
    n_waypoints: int = 50
    speed: float = 0.1  # m/s
    delay_max: float = 0.3  # s, per command, uniform on [0, delay_max]
    jitter_sigma: float = 0.005  # m, per axis
    collision_clearance: float = 0.0  # m
    pos_tol: float = 0.005  # m
    max_retries: int = 5
    detour_offset: float = 0.08  # m, lateral shift of one reactive detour
    ik_tol_pos: float = 1e-5
    ik_tol_rot: float = 1e-4
    ik_max_iters: int = 100

    def __post_init__(self) -> None:
        if self.n_waypoints < 2:
            raise ValueError("n_waypoints must be >= 2")
        if self.speed <= 0:
            raise ValueError("speed must be > 0")
        for name in ("delay_max", "jitter_sigma", "collision_clearance", "pos_tol",
                     "max_retries", "detour_offset"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def noiseless(self) -> "ExecutionConfig":
        return replace(self, delay_max=0.0, jitter_sigma=0.0)


@dataclass(frozen=True)
class RunResult:
    success: bool
    moving_time: float
    failure_reason: FailureReason = FailureReason.NONE

    def __post_init__(self) -> None:
        if self.success != (self.failure_reason is FailureReason.NONE):
            raise ValueError("success must coincide with failure_reason None")
        if not self.moving_time >= 0:
            raise ValueError("moving_time must be >= 0")

    def to_dict(self) -> dict:
        return {"success": self.success, "moving_time": self.moving_time,
                "failure_reason": self.failure_reason.value}


def move_collides(a: np.ndarray, b: np.ndarray, obstacles: Sequence[Cuboid], margin: float) -> bool:
    """True when the straight move ``a -> b`` touches an obstacle or comes within ``margin``."""
    d = move_clearance(a, b, obstacles)
    return d == 0.0 or d < margin


def move_clearance(a: np.ndarray, b: np.ndarray, obstacles: Sequence[Cuboid]) -> float:
    if not obstacles:
        return UNBOUNDED
    pts = segment_points(a, b, SEGMENT_SAMPLES)
    return float(min(points_cuboid_distance(pts, box).min() for box in obstacles))


class _Streams:
    def __init__(self, rng_seed) -> None:
        ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
        jitter, delay, detour = ss.spawn(3)
        self.jitter = np.random.default_rng(jitter)
        self.delay = np.random.default_rng(delay)
        self.detour = np.random.default_rng(detour)

    def offset(self, sigma: float) -> np.ndarray:
        return sigma * self.jitter.standard_normal(3)

    def wait(self, delay_max: float) -> float:
        return delay_max * self.delay.random()


class _Arm:
    """IK along a path, each solve seeded with the previous solution."""

    def __init__(self, arm: ArmModel, cfg: ExecutionConfig, q0: np.ndarray | None) -> None:
        self.arm = arm
        self.cfg = cfg
        self.q = np.array(arm.home if q0 is None else q0, dtype=float)

    def solve(self, p: np.ndarray, quat: np.ndarray) -> np.ndarray:
        q = inverse_kinematics(self.arm, Pose(p, quat), self.q, self.cfg.ik_tol_pos,
                               self.cfg.ik_tol_rot, self.cfg.ik_max_iters)
        self.q = q
        return q

    def position(self) -> np.ndarray:
        return forward_kinematics(self.arm, self.q).position


class _Orienter:
    """Slerp between two tool quaternions by a progress fraction in [0, 1]."""

    def __init__(self, start: np.ndarray, goal: np.ndarray | None) -> None:
        self.start = start
        self.slerp = None
        if goal is not None and not (np.allclose(start, goal) or np.allclose(start, -goal)):
            keys = Rotation.concatenate([quat_to_rotation(start), quat_to_rotation(goal)])
            self.slerp = Slerp([0.0, 1.0], keys)

    def __call__(self, s: float) -> np.ndarray:
        if self.slerp is None:
            return self.start
        q = rotation_to_quat(self.slerp(min(1.0, max(0.0, s))))
        return q / np.linalg.norm(q)


def execute_trajectory(
    curve: CubicBezier,
    arm: ArmModel,
    obstacles: Sequence[Cuboid],
    cfg: ExecutionConfig = ExecutionConfig(),
    rng_seed=0,
    *,
    start_quat: Sequence[float] = TOOL_DOWN,
    goal_quat: Sequence[float] | None = None,
    q0: Sequence[float] | None = None,
) -> RunResult:
    """Follow ``n_waypoints`` uniform samples of ``curve``.

    Interior waypoints are jittered; the first is where the arm already is
    and the last is servoed onto exactly.  Each waypoint must be IK-solvable
    within the joint limits and the straight move into it must stay clear
    of every obstacle.  Tool orientation is slerped from ``start_quat`` to
    ``goal_quat`` over the waypoints.  ``q0`` seeds the first IK solve
    (defaults to the arm's home configuration).
    """
    rng = _Streams(rng_seed)
    waypoints = bezier_sample_uniform(curve, cfg.n_waypoints)
    orient = _Orienter(np.asarray(start_quat, dtype=float),
                       None if goal_quat is None else np.asarray(goal_quat, dtype=float))
    last = cfg.n_waypoints - 1
    driver = _Arm(arm, cfg, None if q0 is None else np.asarray(q0, float))

    elapsed = 0.0
    try:
        driver.solve(waypoints[0], orient(0.0))
    except IKError:
        return RunResult(False, elapsed, FailureReason.RANGE_OF_MOTION)
    prev = waypoints[0]
    for i in range(1, cfg.n_waypoints):
        w = waypoints[i] if i == last else waypoints[i] + rng.offset(cfg.jitter_sigma)
        delay = rng.wait(cfg.delay_max)
        try:
            driver.solve(w, orient(i / last))
        except IKError:
            return RunResult(False, elapsed, FailureReason.RANGE_OF_MOTION)
        if move_collides(prev, w, obstacles, cfg.collision_clearance):
            return RunResult(False, elapsed, FailureReason.COLLISION)
        elapsed += float(np.linalg.norm(w - prev)) / cfg.speed + delay
        prev = w

    if np.linalg.norm(driver.position() - curve.p3) > cfg.pos_tol:
        return RunResult(False, elapsed, FailureReason.TARGET_MISS)
    return RunResult(True, elapsed)


def _perpendicular_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


def _resample(a: np.ndarray, b: np.ndarray, spacing: float) -> np.ndarray:
    """Points after ``a`` up to and including ``b``, at most ``spacing`` apart."""
    k = max(1, math.ceil(float(np.linalg.norm(b - a)) / spacing - 1e-9))
    return segment_points(a, b, k + 1)[1:]


def execute_reactive_baseline(
    source: Sequence[float],
    target: Sequence[float],
    arm: ArmModel,
    obstacles: Sequence[Cuboid],
    cfg: ExecutionConfig = ExecutionConfig(),
    rng_seed=0,
    *,
    quat: Sequence[float] = TOOL_DOWN,
    goal_quat: Sequence[float] | None = None,
    q0: Sequence[float] | None = None,
) -> RunResult:
    """Greedy straight-line mover with stop-and-detour retries.

    There is no plan to look ahead on, so before every step the controller
    queries clearance of the next jittered waypoint; that query is a second
    control round trip and draws its own delay.  When the step would touch an
    obstacle it stops, backs off one waypoint and re-routes through a point
    ``detour_offset`` to the side of the blocked waypoint, in a random
    direction perpendicular to the source-target axis, then heads straight
    for the target again.  Every retry costs the back-off travel time plus
    one delay.  Running out of retries is a collision failure.  Tool
    orientation is slerped from ``quat`` to ``goal_quat`` by progress along
    the source-target axis.

    With zero jitter, zero delay and nothing in the way this reduces exactly
    to :func:`execute_trajectory` on :func:`straight_line_path`.
    """
    rng = _Streams(rng_seed)
    line = straight_line_path(source, target)
    src, dst = line.p0, line.p3
    axis = (dst - src) / np.linalg.norm(dst - src)
    e1, e2 = _perpendicular_basis(axis)
    nominal = bezier_sample_uniform(line, cfg.n_waypoints)
    spacing = float(np.linalg.norm(nominal[1] - nominal[0]))
    length = float(np.linalg.norm(dst - src))
    orient = _Orienter(np.asarray(quat, dtype=float),
                       None if goal_quat is None else np.asarray(goal_quat, dtype=float))
    driver = _Arm(arm, cfg, None if q0 is None else np.asarray(q0, float))

    elapsed = 0.0
    try:
        driver.solve(src, orient(0.0))
    except IKError:
        return RunResult(False, elapsed, FailureReason.RANGE_OF_MOTION)
    # visited positions with their joint solutions, for backing off
    trail = [(nominal[0], driver.q)]
    pending = list(nominal[1:])
    retries = 0
    while pending:
        final = len(pending) == 1
        nxt = pending[0]
        w = nxt if final else nxt + rng.offset(cfg.jitter_sigma)
        sense_delay = rng.wait(cfg.delay_max)
        command_delay = rng.wait(cfg.delay_max)
        pos = trail[-1][0]
        elapsed += sense_delay
        if move_collides(pos, w, obstacles, cfg.collision_clearance):
            if retries >= cfg.max_retries:
                return RunResult(False, elapsed, FailureReason.COLLISION)
            retries += 1
            if len(trail) > 1:
                trail.pop()
            back, q_back = trail[-1]
            elapsed += float(np.linalg.norm(pos - back)) / cfg.speed + command_delay
            driver.q = q_back
            phi = 2.0 * math.pi * rng.detour.random()
            via = nxt + cfg.detour_offset * (math.cos(phi) * e1 + math.sin(phi) * e2)
            pending = list(_resample(back, via, spacing)) + list(_resample(via, dst, spacing))
            continue
        try:
            driver.solve(w, orient(1.0 if final else float(np.dot(w - src, axis)) / length))
        except IKError:
            return RunResult(False, elapsed, FailureReason.RANGE_OF_MOTION)
        elapsed += float(np.linalg.norm(w - pos)) / cfg.speed + command_delay
        trail.append((w, driver.q))
        pending.pop(0)

    if np.linalg.norm(driver.position() - dst) > cfg.pos_tol:
        return RunResult(False, elapsed, FailureReason.TARGET_MISS)
    return RunResult(True, elapsed)
