"""Six-joint serial arm: DH model, forward kinematics, damped least-squares IK."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import ArrayEq, Pose, vec3

N_JOINTS = 6
_POLISH_HALVINGS = 8


class IKError(RuntimeError):
    """The arm cannot be commanded to the requested pose (range-of-motion failure)."""


class Unreachable(IKError):
    """Target lies outside the arm's reach sphere."""


class NotConverged(IKError):
    """Damped least squares did not meet the tolerances within the iteration budget."""


@dataclass(frozen=True, eq=False)
class ArmModel(ArrayEq):
    """Standard-DH chain with per-joint limits.

    ``dh`` rows are ``(a, d, alpha, theta_offset)``; link ``i`` contributes
    ``Rz(q_i + theta_offset) Tz(d) Tx(a) Rx(alpha)``.
    """

    dh: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    base: Pose = field(default_factory=lambda: Pose([0.0, 0.0, 0.0]))
    home: np.ndarray | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        dh = np.array(self.dh, dtype=float)
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if dh.shape != (N_JOINTS, 4):
            raise ValueError(f"dh must be {N_JOINTS}x4, got {dh.shape}")
        if lo.shape != (N_JOINTS,) or hi.shape != (N_JOINTS,):
            raise ValueError("joint limits must have one entry per joint")
        if not (np.all(np.isfinite(dh)) and np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("arm parameters must be finite")
        if np.any(lo >= hi):
            raise ValueError("every joint needs lower < upper")
        home = np.zeros(N_JOINTS) if self.home is None else np.array(self.home, dtype=float)
        for a in (dh, lo, hi, home):
            a.flags.writeable = False
        object.__setattr__(self, "dh", dh)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "home", home)

    @property
    def reach_center(self) -> np.ndarray:
        """World point every reachable position is measured from.

        When the first link has no ``a`` offset its frame origin does not
        move with joint 1, which gives a much tighter sphere.
        """
        a1, d1 = self.dh[0, 0], self.dh[0, 1]
        if a1 == 0.0:
            return self.base.position + self.base.rotate([0.0, 0.0, d1])
        return self.base.position.copy()

    @property
    def max_reach(self) -> float:
        links = self.dh[1:] if self.dh[0, 0] == 0.0 else self.dh
        return float(np.sum(np.hypot(links[:, 0], links[:, 1])))

    def with_base(self, base: Pose) -> "ArmModel":
        return ArmModel(self.dh, self.lower, self.upper, base, self.home, self.name)


def ur5e(base: Pose | None = None) -> ArmModel:
    """UR5e preset: manufacturer DH constants; elbow limited to +-pi."""
    dh = [
        # a,       d,      alpha,       theta_offset
        [0.0,     0.1625,  math.pi / 2,  0.0],
        [-0.425,  0.0,     0.0,          0.0],
        [-0.3922, 0.0,     0.0,          0.0],
        [0.0,     0.1333,  math.pi / 2,  0.0],
        [0.0,     0.0997, -math.pi / 2,  0.0],
        [0.0,     0.0996,  0.0,          0.0],
    ]
    tau = 2 * math.pi
    lower = [-tau, -tau, -math.pi, -tau, -tau, -tau]
    upper = [tau, tau, math.pi, tau, tau, tau]
    # elbow-up, tool pointing down
    home = [0.0, -math.pi / 2, math.pi / 2, -math.pi / 2, -math.pi / 2, 0.0]
    return ArmModel(dh, lower, upper, base or Pose([0.0, 0.0, 0.0]), home, "ur5e")


PRESETS = {"ur5e": ur5e}


def dh_matrix(a: float, d: float, alpha: float, theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def joint_frames(arm: ArmModel, q: Sequence[float]) -> list[np.ndarray]:
    """World transforms of frames 0..6 (frame 0 is the base)."""
    T = arm.base.matrix()
    frames = [T]
    for (a, d, alpha, off), qi in zip(arm.dh, q):
        T = T @ dh_matrix(a, d, alpha, qi + off)
        frames.append(T)
    return frames


def fk_matrix(arm: ArmModel, q: Sequence[float]) -> np.ndarray:
    return joint_frames(arm, q)[-1]


def forward_kinematics(arm: ArmModel, q: Sequence[float]) -> Pose:
    """End-effector pose for joint angles ``q`` (radians)."""
    return Pose.from_matrix(fk_matrix(arm, q))


def jacobian(frames: list[np.ndarray]) -> np.ndarray:
    """Geometric 6xN Jacobian (linear rows first) in the world frame."""
    p_e = frames[-1][:3, 3]
    J = np.empty((6, len(frames) - 1))
    for i, T in enumerate(frames[:-1]):
        z = T[:3, 2]
        J[:3, i] = np.cross(z, p_e - T[:3, 3])
        J[3:, i] = z
    return J


def within_limits(arm: ArmModel, q: Sequence[float]) -> bool:
    """True iff every joint lies in its closed interval ``[lower, upper]``."""
    q = np.asarray(q, dtype=float)
    return bool(np.all(q >= arm.lower) and np.all(q <= arm.upper))


def pose_error(target: Pose, T: np.ndarray) -> np.ndarray:
    """Position error stacked on the world-frame rotation vector taking ``T`` to ``target``."""
    R_err = target.rotation_matrix() @ T[:3, :3].T
    return np.concatenate([target.position - T[:3, 3], Rotation.from_matrix(R_err).as_rotvec()])


def inverse_kinematics(
    arm: ArmModel,
    target: Pose,
    seed: Sequence[float],
    tol_pos: float = 1e-6,
    tol_rot: float = 1e-6,
    max_iters: int = 200,
    damping: float = 0.01,
    polish_below: float = 1e-3,
    max_step: float = 0.2,
) -> np.ndarray:
    """Solve for joint angles reaching ``target`` by damped least squares.

    Each step is ``dq = J^T (J J^T + damping^2 I)^-1 e`` followed by clamping
    to the joint limits.  Once the residual norm drops below ``polish_below``
    the step switches to undamped least squares, which keeps convergence
    quadratic next to wrist and elbow singularities where the damped step
    stalls.  The polish step is backtracked until it reduces the error, or
    replaced by the damped step if it never does.  Steps are capped at
    ``max_step`` rad per joint.  After convergence one more undamped step is
    kept if it lowers the error, so results land well inside the tolerance
    rather than just under it.  The returned configuration always satisfies
    both tolerances and the limits.

    Raises
    ------
    Unreachable
        ``target`` lies beyond :attr:`ArmModel.max_reach`.
    NotConverged
        Tolerances not met after ``max_iters`` steps.
    """
    if tol_pos <= 0 or tol_rot <= 0:
        raise ValueError("tolerances must be positive")
    if np.linalg.norm(target.position - arm.reach_center) > arm.max_reach:
        raise Unreachable(f"target {target.position} beyond reach {arm.max_reach:.3f} m")

    q = np.clip(np.asarray(seed, dtype=float), arm.lower, arm.upper)
    lam2 = damping * damping
    frames = joint_frames(arm, q)
    e = pose_error(target, frames[-1])
    for it in range(max_iters + 1):
        if np.linalg.norm(e[:3]) <= tol_pos and np.linalg.norm(e[3:]) <= tol_rot:
            return q if it == 0 else _refine(arm, target, q, e, max_step)
        if it == max_iters:
            break
        J = jacobian(frames)
        err = np.linalg.norm(e)
        if err < polish_below:
            dq = np.linalg.lstsq(J, e, rcond=1e-10)[0]
            for _halving in range(_POLISH_HALVINGS):
                q_try = _step(arm, q, dq, max_step)
                frames_try = joint_frames(arm, q_try)
                e_try = pose_error(target, frames_try[-1])
                if np.linalg.norm(e_try) < err:
                    break
                dq = 0.5 * dq
            else:
                q_try = None
            if q_try is not None:
                q, frames, e = q_try, frames_try, e_try
                continue
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), e)
        q = _step(arm, q, dq, max_step)
        frames = joint_frames(arm, q)
        e = pose_error(target, frames[-1])
    raise NotConverged(f"no IK solution within {max_iters} iterations (residual {np.linalg.norm(e):.3g})")


def _refine(arm: ArmModel, target: Pose, q: np.ndarray, e: np.ndarray, max_step: float) -> np.ndarray:
    J = jacobian(joint_frames(arm, q))
    q_try = _step(arm, q, np.linalg.lstsq(J, e, rcond=1e-10)[0], max_step)
    e_try = pose_error(target, fk_matrix(arm, q_try))
    return q_try if np.linalg.norm(e_try) < np.linalg.norm(e) else q


def _step(arm: ArmModel, q: np.ndarray, dq: np.ndarray, max_step: float) -> np.ndarray:
    biggest = np.max(np.abs(dq))
    if biggest > max_step:
        dq = dq * (max_step / biggest)
    return np.clip(q + dq, arm.lower, arm.upper)
