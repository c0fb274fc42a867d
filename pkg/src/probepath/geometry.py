"""Vector and pose primitives, cubic Bezier curves, and cuboid obstacles.

Points are plain ``numpy`` arrays of shape ``(3,)``.  Quaternions are stored
scalar-first ``(w, x, y, z)``; conversion to rotation matrices goes through
:mod:`scipy.spatial.transform`, which is scalar-last.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

QUAT_NORM_TOL = 1e-9

#: Sentinel returned by clearance queries when there is nothing to collide with.
UNBOUNDED = float("inf")


def vec3(v: Iterable[float]) -> np.ndarray:
    """Return a read-only float array of shape (3,), rejecting non-finite input."""
    a = np.array(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"expected 3 components, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite vector {a}")
    a.flags.writeable = False
    return a


class ArrayEq:
    """Field-wise equality for dataclasses holding numpy arrays."""

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self))

    __hash__ = None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


# -----------------------------------------------------------------------------
# Rotations


def quat_to_rotation(q: Sequence[float]) -> Rotation:
    w, x, y, z = q
    return Rotation.from_quat([x, y, z, w])


def rotation_to_quat(r: Rotation) -> np.ndarray:
    x, y, z, w = r.as_quat()
    q = np.array([w, x, y, z])
    # canonical hemisphere keeps equal rotations bitwise-equal
    if w < 0:
        q = -q
    return q


def quat_multiply(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    """Hamilton product ``a * b`` of scalar-first quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def rotation_angle(a: Sequence[float], b: Sequence[float]) -> float:
    """Angle (rad) of the relative rotation between two unit quaternions."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * float(np.arccos(min(1.0, d)))


@dataclass(frozen=True, eq=False)
class Pose(ArrayEq):
    """Rigid-body pose: position in meters, orientation as a unit quaternion (w, x, y, z)."""

    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", vec3(self.position))
        q = np.array(self.orientation, dtype=float).reshape(-1)
        if q.shape != (4,) or not np.all(np.isfinite(q)):
            raise ValueError(f"orientation must be 4 finite components, got {q}")
        if abs(np.linalg.norm(q) - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"orientation is not a unit quaternion (norm {np.linalg.norm(q)})")
        object.__setattr__(self, "orientation", _frozen(q))

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "Pose":
        q = rotation_to_quat(Rotation.from_matrix(T[:3, :3]))
        return cls(T[:3, 3], q / np.linalg.norm(q))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_rotation(self.orientation).as_matrix()

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation_matrix()
        T[:3, 3] = self.position
        return T

    def rotate(self, v: Sequence[float]) -> np.ndarray:
        """Rotate a vector from this pose's frame into the world frame."""
        return self.rotation_matrix() @ np.asarray(v, dtype=float)


# -----------------------------------------------------------------------------
# Cubic Bezier curves


@dataclass(frozen=True, eq=False)
class CubicBezier(ArrayEq):
    """Cubic Bezier curve; ``p0`` is the path source and ``p3`` its target."""

    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray

    def __post_init__(self) -> None:
        for name in ("p0", "p1", "p2", "p3"):
            object.__setattr__(self, name, vec3(getattr(self, name)))

    @property
    def control_points(self) -> np.ndarray:
        return np.stack([self.p0, self.p1, self.p2, self.p3])

    def reversed(self) -> "CubicBezier":
        return CubicBezier(self.p3, self.p2, self.p1, self.p0)


def _bernstein_points(curve: CubicBezier, t: np.ndarray) -> np.ndarray:
    t = t[:, None]
    s = 1.0 - t
    return (s * s * s) * curve.p0 + (3.0 * s * s * t) * curve.p1 \
        + (3.0 * s * t * t) * curve.p2 + (t * t * t) * curve.p3


def bezier_eval(curve: CubicBezier, t: float) -> np.ndarray:
    """Evaluate the curve at parameter ``t`` in [0, 1] (Bernstein form)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"Bezier parameter out of range: t={t}")
    return _bernstein_points(curve, np.array([float(t)]))[0]


def bezier_sample_uniform(curve: CubicBezier, n: int) -> np.ndarray:
    """Sample ``n`` points at uniformly spaced parameters ``t_i = i / (n - 1)``.

    Returns an ``(n, 3)`` array whose first row is ``p0`` and last row ``p3``.
    """
    if n < 2:
        raise ValueError(f"need at least 2 samples, got n={n}")
    return _bernstein_points(curve, np.linspace(0.0, 1.0, n))


def polyline_length(points: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def arc_length(curve: CubicBezier, n: int = 1000) -> float:
    """Chordal arc-length approximation over ``n`` uniform samples."""
    return polyline_length(bezier_sample_uniform(curve, n))


# -----------------------------------------------------------------------------
# Obstacles


@dataclass(frozen=True, eq=False)
class Cuboid(ArrayEq):
    """Axis-aligned box given by its center and strictly positive half-extents."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", vec3(self.center))
        h = vec3(self.half_extents)
        if np.any(h <= 0):
            raise ValueError(f"half_extents must be > 0, got {h}")
        object.__setattr__(self, "half_extents", h)

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_extents

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_extents

    def contains(self, p: Sequence[float]) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(np.abs(p - self.center) <= self.half_extents))

    def scaled(self, s: float) -> "Cuboid":
        return Cuboid(self.center * s, self.half_extents * s)


def points_cuboid_distance(points: np.ndarray, box: Cuboid) -> np.ndarray:
    """Vectorized :func:`point_cuboid_distance` over an ``(m, 3)`` array."""
    excess = np.abs(np.asarray(points, dtype=float) - box.center) - box.half_extents
    return np.linalg.norm(np.maximum(excess, 0.0), axis=-1)


def point_cuboid_distance(p: Sequence[float], box: Cuboid) -> float:
    """Euclidean distance from ``p`` to the closest point of ``box`` (0 inside)."""
    return float(points_cuboid_distance(np.asarray(p, dtype=float)[None, :], box)[0])


def segment_points(a: Sequence[float], b: Sequence[float], n: int) -> np.ndarray:
    if n < 2:
        raise ValueError(f"need at least 2 samples, got n={n}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return a + t * (b - a)


def segment_clearance(a: Sequence[float], b: Sequence[float], box: Cuboid, n: int) -> float:
    """Minimum box distance over ``n`` uniform samples of the segment ``ab``."""
    return float(points_cuboid_distance(segment_points(a, b, n), box).min())


def clearance(points: np.ndarray, obstacles: Sequence[Cuboid]) -> float:
    """Smallest distance from any point to any obstacle; ``UNBOUNDED`` if none."""
    if not obstacles:
        return UNBOUNDED
    return float(min(points_cuboid_distance(points, box).min() for box in obstacles))
