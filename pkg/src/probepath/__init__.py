"""Obstacle-aware cubic Bezier path planning for a simulated 6-DoF probe arm."""
from .geometry import (
    CubicBezier,
    Cuboid,
    Pose,
    arc_length,
    bezier_eval,
    bezier_sample_uniform,
    point_cuboid_distance,
    segment_clearance,
)
from .kinematics import ArmModel, forward_kinematics, inverse_kinematics, ur5e, within_limits
from .planner import PlannerConfig, PlanResult, plan_path, straight_line_path, validate_curve
from .sim import ExecutionConfig, FailureReason, RunResult, execute_reactive_baseline, execute_trajectory

__version__ = "0.1.0"
