"""Pose algebra and action encodings for frame pairs.

Conventions, fixed once and pinned by tests:

- Quaternions are (w, x, y, z), canonicalized to the w >= 0 hemisphere;
  a tie at w == 0 is broken by making the first nonzero component positive.
- Extrinsics are world-to-camera: ``x_cam = R @ x_world + t``.
- The relative rotation for a frame pair (t, t') is ``R_rel = R_t' @ R_t^-1``.
- The relative translation is expressed in the earlier camera's frame:
  ``t_rel = R_t @ (c_t' - c_t)`` where ``c = -R^T @ t`` is the camera center.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .errors import PoseError
from .manifest import CameraPose

FLAT_DIMS = {"yaw": 2, "pose": 8}


def wrap_angle_deg(delta: float) -> float:
    """Wrap an angle difference in degrees to (-180, 180]."""
    r = float(delta) % 360.0
    if r > 180.0:
        r -= 360.0
    return r


# ---------------------------------------------------------------------------
# quaternion utilities


def canonicalize_quaternion(q: np.ndarray) -> np.ndarray:
    """Normalize and pick the w >= 0 representative of the double cover."""
    q = np.asarray(q, dtype=np.float64).reshape(4)
    norm = np.linalg.norm(q)
    if norm == 0.0:
        raise PoseError("zero quaternion cannot be canonicalized")
    q = q / norm
    if q[0] < 0.0:
        q = -q
    elif q[0] == 0.0:
        for v in q[1:]:
            if v != 0.0:
                if v < 0.0:
                    q = -q
                break
    return q


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=np.float64).reshape(4)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """Rotation matrix to quaternion via the numerically stable branch pick."""
    R = np.asarray(R, dtype=np.float64)
    m00, m01, m02 = R[0]
    m10, m11, m12 = R[1]
    m20, m21, m22 = R[2]
    trace = m00 + m11 + m22
    if trace > 0.0:
        s = np.sqrt(trace + 1.0) * 2.0
        q = np.array([0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s])
    elif m00 >= m11 and m00 >= m22:
        s = np.sqrt(1.0 + m00 - m11 - m22) * 2.0
        q = np.array([(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s])
    elif m11 >= m22:
        s = np.sqrt(1.0 + m11 - m00 - m22) * 2.0
        q = np.array([(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s])
    else:
        s = np.sqrt(1.0 + m22 - m00 - m11) * 2.0
        q = np.array([(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s])
    return canonicalize_quaternion(q)


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = np.asarray(a, dtype=np.float64).reshape(4)
    bw, bx, by, bz = np.asarray(b, dtype=np.float64).reshape(4)
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).reshape(4)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def rotation_angle_deg(q: np.ndarray) -> float:
    """Absolute rotation angle of a unit quaternion, in [0, 180]."""
    w = abs(float(np.asarray(q).reshape(4)[0]))
    return float(np.degrees(2.0 * np.arccos(min(1.0, w))))


# ---------------------------------------------------------------------------
# actions


@dataclasses.dataclass(frozen=True)
class Action:
    """Tagged action between two frames of the same clip.

    yaw style: (sin, cos) of the wrapped rotation angle.
    pose style: canonical unit quaternion (4), translation in the earlier
    camera's frame (3) and the per-clip orientation flag (1).
    """

    style: str
    sin: float | None = None
    cos: float | None = None
    quaternion: np.ndarray | None = None
    translation: np.ndarray | None = None
    orientation_flag: int = 0

    def flat(self) -> np.ndarray:
        if self.style == "yaw":
            return np.array([self.sin, self.cos], dtype=np.float64)
        return np.concatenate(
            [
                np.asarray(self.quaternion, dtype=np.float64),
                np.asarray(self.translation, dtype=np.float64),
                [float(self.orientation_flag)],
            ]
        )


def yaw_action(yaw_t: float, yaw_t2: float) -> Action:
    """Action for an object-yaw dataset: sine and cosine of the wrapped delta."""
    delta = np.radians(wrap_angle_deg(yaw_t2 - yaw_t))
    return Action(style="yaw", sin=float(np.sin(delta)), cos=float(np.cos(delta)))


def relative_pose_action(
    pose_t: CameraPose, pose_t2: CameraPose, orientation_flag: int = 0
) -> Action:
    """Action for an ego-motion dataset: relative rotation + egocentric translation."""
    for pose in (pose_t, pose_t2):
        norm = float(np.linalg.norm(pose.quaternion))
        if abs(norm - 1.0) > 1e-4:
            raise PoseError(f"extrinsics quaternion norm {norm:.6f} too far from unit")
    q_t = canonicalize_quaternion(pose_t.quaternion)
    q_t2 = canonicalize_quaternion(pose_t2.quaternion)
    R_t = quat_to_matrix(q_t)
    R_t2 = quat_to_matrix(q_t2)
    R_rel = R_t2 @ R_t.T
    q_rel = canonicalize_quaternion(quat_from_matrix(R_rel))
    c_t = -R_t.T @ pose_t.translation
    c_t2 = -R_t2.T @ pose_t2.translation
    t_rel = R_t @ (c_t2 - c_t)
    return Action(
        style="pose",
        quaternion=q_rel,
        translation=t_rel,
        orientation_flag=int(orientation_flag),
    )


def action_between(frame_t, frame_t2, style: str) -> Action:
    """Dispatch on dataset style; frames are ClipFrame-like objects."""
    if style == "yaw":
        return yaw_action(frame_t.yaw_deg, frame_t2.yaw_deg)
    if style == "pose":
        if frame_t.extrinsics is None or frame_t2.extrinsics is None:
            raise PoseError("pose-style action requires extrinsics on both frames")
        return relative_pose_action(
            frame_t.extrinsics, frame_t2.extrinsics, frame_t.orientation_flag
        )
    raise ValueError(f"unknown dataset style {style!r}")


# ---------------------------------------------------------------------------
# normalization (inverse-model regression targets)


@dataclasses.dataclass(frozen=True)
class ActionStats:
    """Per-component mean/std of flat action vectors over a training split."""

    style: str
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_flat(cls, style: str, flats: np.ndarray) -> "ActionStats":
        flats = np.asarray(flats, dtype=np.float64)
        if flats.ndim != 2 or flats.shape[1] != FLAT_DIMS[style]:
            raise ValueError(f"expected (N, {FLAT_DIMS[style]}) flat actions, got {flats.shape}")
        return cls(style=style, mean=flats.mean(axis=0), std=flats.std(axis=0))

    def to_json(self) -> str:
        return json.dumps(
            {"style": self.style, "mean": self.mean.tolist(), "std": self.std.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "ActionStats":
        doc = json.loads(text)
        return cls(
            style=doc["style"],
            mean=np.asarray(doc["mean"], dtype=np.float64),
            std=np.asarray(doc["std"], dtype=np.float64),
        )


def normalize_action(action: Action, stats: ActionStats) -> np.ndarray:
    """Z-score a flat action vector; zero-variance components map to 0."""
    flat = action.flat() if isinstance(action, Action) else np.asarray(action, dtype=np.float64)
    if flat.shape != stats.mean.shape:
        raise ValueError(
            f"action dimensionality {flat.shape} does not match stats {stats.mean.shape}"
        )
    return np.where(stats.std > 0.0, (flat - stats.mean) / np.where(stats.std > 0, stats.std, 1.0), 0.0)
