"""Obstacle-aware cubic Bezier planning and the straight-line baseline path."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    UNBOUNDED,
    CubicBezier,
    Cuboid,
    bezier_sample_uniform,
    clearance,
    points_cuboid_distance,
    vec3,
)

_UP = np.array([0.0, 0.0, 1.0])
_DEGENERATE = 1e-12


class PlanningError(RuntimeError):
    pass


class PlanningFailed(PlanningError):
    """No collision-free curve found within the iteration budget or workspace."""


class InvalidEndpoints(PlanningError):
    """Source equals target, or an endpoint is closer than ``clearance`` to an obstacle."""


def _default_workspace() -> Cuboid:
    return Cuboid([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])


@dataclass(frozen=True)
class PlannerConfig:
    clearance: float = 0.05  # m, required distance from every checked sample
    n_check: int = 200
    step: float = 0.05  # m, control-point displacement per iteration
    max_iters: int = 100
    workspace: Cuboid = field(default_factory=_default_workspace)

    def __post_init__(self) -> None:
        if self.clearance < 0:
            raise ValueError("clearance must be >= 0")
        if self.n_check < 2:
            raise ValueError("n_check must be >= 2")
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class PlanResult:
    curve: CubicBezier
    iterations_used: int
    min_clearance_achieved: float


def straight_line_path(source: Sequence[float], target: Sequence[float]) -> CubicBezier:
    """Collinear cubic with control points at thirds of the segment."""
    s, t = vec3(source), vec3(target)
    if np.array_equal(s, t):
        raise InvalidEndpoints("source and target coincide")
    d = t - s
    return CubicBezier(s, s + d / 3.0, s + 2.0 * d / 3.0, t)


def validate_curve(curve: CubicBezier, obstacles: Sequence[Cuboid], clearance_m: float, n: int) -> float:
    """Minimum obstacle distance over ``n`` uniform curve samples.

    ``clearance_m`` is not used to decide anything; the caller compares the
    returned value against it.  Returns ``UNBOUNDED`` when there are no
    obstacles.
    """
    return clearance(bezier_sample_uniform(curve, n), obstacles)


def plan_path(
    source: Sequence[float],
    target: Sequence[float],
    obstacles: Sequence[Cuboid],
    cfg: PlannerConfig = PlannerConfig(),
) -> PlanResult:
    """Bend a cubic Bezier from ``source`` to ``target`` around the obstacles.

    The inner control points start at the thirds of the straight segment.
    While some checked sample is closer than ``cfg.clearance`` to an obstacle,
    both inner points move by ``cfg.step`` along the repulsion direction: from
    the center of the obstacle nearest the deepest violating sample toward
    that sample, with the component along the source-target axis removed
    (``+z`` when that vanishes).  Inner points are clamped to the workspace
    after every move; the endpoints never move.
    """
    curve = straight_line_path(source, target)
    s, t = curve.p0, curve.p3
    for name, p in (("source", s), ("target", t)):
        if not cfg.workspace.contains(p):
            raise InvalidEndpoints(f"{name} {p} outside the workspace")
        d = clearance(p[None, :], obstacles)
        if d < cfg.clearance or d == 0.0:
            raise InvalidEndpoints(f"{name} {p} is {d:.4f} m from an obstacle (clearance {cfg.clearance})")

    axis = (t - s) / np.linalg.norm(t - s)
    lo, hi = cfg.workspace.lower, cfg.workspace.upper
    p1, p2 = np.clip(curve.p1, lo, hi), np.clip(curve.p2, lo, hi)

    for it in range(cfg.max_iters + 1):
        curve = CubicBezier(s, p1, p2, t)
        pts = bezier_sample_uniform(curve, cfg.n_check)
        if not obstacles:
            return PlanResult(curve, it, UNBOUNDED)
        dists = np.stack([points_cuboid_distance(pts, box) for box in obstacles])
        nearest = dists.argmin(axis=0)
        per_sample = dists[nearest, np.arange(len(pts))]
        worst = int(per_sample.argmin())
        if per_sample[worst] >= cfg.clearance and per_sample[worst] > 0.0:
            return PlanResult(curve, it, float(per_sample[worst]))
        if it == cfg.max_iters:
            break

        direction = pts[worst] - obstacles[nearest[worst]].center
        direction = direction - np.dot(direction, axis) * axis
        norm = np.linalg.norm(direction)
        direction = _UP if norm < _DEGENERATE else direction / norm

        new_p1 = np.clip(p1 + cfg.step * direction, lo, hi)
        new_p2 = np.clip(p2 + cfg.step * direction, lo, hi)
        if np.array_equal(new_p1, p1) and np.array_equal(new_p2, p2):
            raise PlanningFailed(f"workspace clamp blocks escape after {it} iterations")
        p1, p2 = new_p1, new_p2

    raise PlanningFailed(
        f"clearance {cfg.clearance} not reached in {cfg.max_iters} iterations "
        f"(best sample distance {per_sample[worst]:.4f})"
    )
