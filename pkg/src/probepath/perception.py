"""Synthetic fiducial-marker pose oracle.

Stands in for camera-based marker detection: true marker poses go in, noisy
measured poses come out.  The marker's surface normal is the +z axis of its
frame.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import Pose, quat_to_rotation, rotation_to_quat

#: Rotation of pi about x: a tool frame whose +z points along -normal.
FLIP_X = np.array([0.0, 1.0, 0.0, 0.0])


class TargetNotFound(LookupError):
    """The requested marker id is not among the observations."""


@dataclass(frozen=True)
class Marker:
    id: int
    true_pose: Pose


@dataclass(frozen=True)
class NoiseModel:
    sigma_pos: float = 0.002  # m, per axis
    sigma_rot: float = 0.01  # rad, per rotation-vector axis
    detection_prob: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma_pos < 0 or self.sigma_rot < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0.0 <= self.detection_prob <= 1.0:
            raise ValueError("detection_prob must lie in [0, 1]")


def observe_markers(markers: Sequence[Marker], noise: NoiseModel, rng_seed) -> list[tuple[int, Pose]]:
    """Detect each marker independently and perturb its pose.

    Every marker consumes the same number of draws whether or not it is
    detected, so adding noise or changing ``detection_prob`` never shifts
    the stream seen by later markers.
    """
    ids = [m.id for m in markers]
    if len(set(ids)) != len(ids):
        raise ValueError(f"marker ids must be unique, got {ids}")
    rng = np.random.default_rng(rng_seed)
    out = []
    for m in markers:
        u, dp, dr = rng.random(), rng.standard_normal(3), rng.standard_normal(3)
        if u >= noise.detection_prob:
            continue
        if noise.sigma_pos == 0.0 and noise.sigma_rot == 0.0:
            out.append((m.id, m.true_pose))
            continue
        pos = m.true_pose.position + noise.sigma_pos * dp
        rot = Rotation.from_rotvec(noise.sigma_rot * dr) * quat_to_rotation(m.true_pose.orientation)
        q = rotation_to_quat(rot)
        out.append((m.id, Pose(pos, q / np.linalg.norm(q))))
    return out


def select_target(observations: Sequence[tuple[int, Pose]], desired_id: int) -> Pose:
    for marker_id, pose in observations:
        if marker_id == desired_id:
            return pose
    raise TargetNotFound(f"marker {desired_id} not observed (saw {[i for i, _ in observations]})")


def approach_point(target: Pose, standoff: float) -> np.ndarray:
    """Point ``standoff`` meters out along the marker's +z normal."""
    if standoff < 0:
        raise ValueError("standoff must be >= 0")
    if standoff == 0.0:
        return target.position.copy()
    return target.position + standoff * target.rotate([0.0, 0.0, 1.0])


def approach_orientation(target: Pose) -> np.ndarray:
    """Tool quaternion facing the marker: tool +z along the marker's -z."""
    q = rotation_to_quat(quat_to_rotation(target.orientation) * quat_to_rotation(FLIP_X))
    return q / np.linalg.norm(q)
