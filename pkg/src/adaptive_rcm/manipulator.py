"""Serial-chain kinematics for a 7-DoF arm carrying a rigid surgical instrument.

A chain is described joint by joint: a fixed transform from the previous joint
frame, followed by a revolute rotation about a unit axis expressed in that
frame. The end-effector point sits at a fixed offset from the last joint frame,
and the instrument wrist center lies ``instrument_length`` further along the
end-effector frame's +z axis (the shaft axis).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

N_JOINTS = 7
_RIGID_TOL = 1e-9


class JointLimitWarning(UserWarning):
    """Raised (as a warning) when a configuration leaves the joint limits."""


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: ``skew(a) @ b == np.cross(a, b)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product over the last axis; a lean stand-in for ``np.cross`` on 3-vectors."""
    a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2]
    b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1], axis=-1)


def axis_angle_matrix(axis: Sequence[float], angle: float) -> np.ndarray:
    """Rodrigues rotation about ``axis`` (normalized internally) by ``angle`` rad."""
    k = np.asarray(axis, dtype=float)
    n = np.linalg.norm(k)
    if n == 0.0:
        return np.eye(3)
    K = skew(k / n)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotvec_matrix(rotvec: Sequence[float]) -> np.ndarray:
    """Rotation matrix from an axis-angle vector (direction = axis, norm = angle)."""
    r = np.asarray(rotvec, dtype=float)
    return axis_angle_matrix(r, float(np.linalg.norm(r)))


def make_transform(translation: Sequence[float] = (0.0, 0.0, 0.0),
                   rotation: np.ndarray | None = None) -> np.ndarray:
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = rotation
    T[:3, 3] = translation
    return T


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_rigid(T: np.ndarray, what: str) -> None:
    if T.shape != (4, 4):
        raise ValueError(f"{what}: expected a 4x4 transform, got shape {T.shape}")
    R = T[:3, :3]
    if (np.abs(R.T @ R - np.eye(3)).max() > _RIGID_TOL
            or abs(np.linalg.det(R) - 1.0) > _RIGID_TOL
            or np.abs(T[3] - [0.0, 0.0, 0.0, 1.0]).max() > 0.0):
        raise ValueError(f"{what}: transform is not rigid")


@dataclass(frozen=True)
class Joint:
    """A revolute joint: ``origin`` maps the previous frame to this joint's frame
    at q=0, and the joint rotates about ``axis`` (a unit vector in its own frame)."""

    axis: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.eye(4))
    limits: tuple[float, float] = (-np.pi, np.pi)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if axis.shape != (3,) or n == 0.0:
            raise ValueError("joint axis must be a nonzero 3-vector")
        object.__setattr__(self, "axis", _frozen(axis / n))
        origin = np.asarray(self.origin, dtype=float)
        _check_rigid(origin, "joint origin")
        object.__setattr__(self, "origin", _frozen(origin))
        lo, hi = (float(v) for v in self.limits)
        if lo > hi:
            raise ValueError(f"joint limits inverted: {self.limits}")
        object.__setattr__(self, "limits", (lo, hi))


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.orientation, dtype=float)
        if (np.abs(R.T @ R - np.eye(3)).max() > _RIGID_TOL
                or abs(np.linalg.det(R) - 1.0) > _RIGID_TOL):
            raise ValueError("pose orientation is not a proper rotation")
        object.__setattr__(self, "position", _frozen(self.position))
        object.__setattr__(self, "orientation", _frozen(R))


@dataclass(frozen=True)
class ManipulatorModel:
    """Seven revolute joints, a flange offset and a straight instrument shaft."""

    joints: tuple[Joint, ...]
    ee_offset: np.ndarray
    instrument_length: float
    name: str = "custom"

    def __post_init__(self):
        joints = tuple(self.joints)
        if len(joints) != N_JOINTS:
            raise ValueError(f"expected exactly {N_JOINTS} joints, got {len(joints)}")
        object.__setattr__(self, "joints", joints)
        ee = np.asarray(self.ee_offset, dtype=float)
        _check_rigid(ee, "ee_offset")
        object.__setattr__(self, "ee_offset", _frozen(ee))
        if not self.instrument_length > 0.0:
            raise ValueError("instrument_length must be positive")
        object.__setattr__(self, "instrument_length", float(self.instrument_length))

    @property
    def lower_limits(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper_limits(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    def random_configuration(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower_limits, self.upper_limits)


@dataclass(frozen=True)
class Kinematics:
    """Everything the controller needs from one configuration, computed in one pass."""

    x_ee: np.ndarray
    x_ins: np.ndarray
    R_ee: np.ndarray
    J_ee: np.ndarray
    J_ins: np.ndarray

    @property
    def d_ins(self) -> np.ndarray:
        return self.x_ins - self.x_ee


def _as_q(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (N_JOINTS,):
        raise ValueError(f"q must have shape ({N_JOINTS},), got {q.shape}")
    return q


def _check_limits(model: ManipulatorModel, q: np.ndarray) -> None:
    if np.any(q < model.lower_limits) or np.any(q > model.upper_limits):
        warnings.warn(f"configuration outside joint limits of {model.name!r}",
                      JointLimitWarning, stacklevel=3)


def _chain(model: ManipulatorModel, q: np.ndarray):
    """World axes and origins of every joint, plus the end-effector transform."""
    T = np.eye(4)
    axes = np.empty((N_JOINTS, 3))
    origins = np.empty((N_JOINTS, 3))
    for i, (joint, qi) in enumerate(zip(model.joints, q)):
        T = T @ joint.origin
        axes[i] = T[:3, :3] @ joint.axis
        origins[i] = T[:3, 3]
        T = T @ make_transform(rotation=axis_angle_matrix(joint.axis, qi))
    return axes, origins, T @ model.ee_offset


def _instrument_point(model: ManipulatorModel, T_ee: np.ndarray) -> np.ndarray:
    return T_ee[:3, 3] + model.instrument_length * T_ee[:3, 2]


def forward_kinematics(model: ManipulatorModel, q) -> tuple[Pose, Pose]:
    """Poses of the end-effector point and of the instrument wrist center.

    Both poses share the end-effector orientation; the instrument point is
    offset by ``instrument_length`` along its z column.
    """
    q = _as_q(q)
    _check_limits(model, q)
    _, _, T_ee = _chain(model, q)
    R = T_ee[:3, :3]
    return Pose(T_ee[:3, 3], R), Pose(_instrument_point(model, T_ee), R)


def _position_jacobian(axes, origins, point) -> np.ndarray:
    return cross(axes, point - origins).T


def jacobian_ee(model: ManipulatorModel, q) -> np.ndarray:
    """3x7 position Jacobian of the end-effector point."""
    axes, origins, T_ee = _chain(model, _as_q(q))
    return _position_jacobian(axes, origins, T_ee[:3, 3])


def jacobian_ins(model: ManipulatorModel, q) -> np.ndarray:
    """3x7 position Jacobian of the instrument wrist center."""
    axes, origins, T_ee = _chain(model, _as_q(q))
    return _position_jacobian(axes, origins, _instrument_point(model, T_ee))


def evaluate(model: ManipulatorModel, q) -> Kinematics:
    q = _as_q(q)
    _check_limits(model, q)
    axes, origins, T_ee = _chain(model, q)
    x_ee = T_ee[:3, 3].copy()
    x_ins = _instrument_point(model, T_ee)
    return Kinematics(
        x_ee=x_ee,
        x_ins=x_ins,
        R_ee=T_ee[:3, :3].copy(),
        J_ee=_position_jacobian(axes, origins, x_ee),
        J_ins=_position_jacobian(axes, origins, x_ins),
    )


# -- built-in models ---------------------------------------------------------
# Neither robot's dimensions come from the control method itself. The generic
# arm uses round numbers; the iiwa-like arm follows the public LBR iiwa 14 R820
# data sheet (link offsets 0.36 / 0.42 / 0.40 / 0.126 m, limits +-170/120/175 deg).

DEFAULT_INSTRUMENT_LENGTH = 0.4

_Z = (0.0, 0.0, 1.0)
_Y = (0.0, 1.0, 0.0)
_X = (1.0, 0.0, 0.0)


def _up(h: float) -> np.ndarray:
    return make_transform((0.0, 0.0, h))


def generic_7dof(instrument_length: float = DEFAULT_INSTRUMENT_LENGTH) -> ManipulatorModel:
    """Spherical shoulder (z, y, x), elbow (y), spherical wrist (z, y, z)."""
    d = np.deg2rad
    layout = [
        (_Z, 0.3, 170), (_Y, 0.0, 120), (_X, 0.0, 170),
        (_Y, 0.4, 150),
        (_Z, 0.4, 170), (_Y, 0.0, 120), (_Z, 0.0, 175),
    ]
    joints = tuple(Joint(axis, _up(h), (-d(lim), d(lim))) for axis, h, lim in layout)
    return ManipulatorModel(joints, _up(0.1), instrument_length, name="generic-7dof")


def iiwa_like(instrument_length: float = DEFAULT_INSTRUMENT_LENGTH) -> ManipulatorModel:
    """Alternating z/y axes with LBR iiwa 14 link offsets."""
    d = np.deg2rad
    layout = [
        (_Z, 0.1575, 170), (_Y, 0.2025, 120), (_Z, 0.2045, 170),
        ((0.0, -1.0, 0.0), 0.2155, 120),
        (_Z, 0.1845, 170), (_Y, 0.2155, 120), (_Z, 0.081, 175),
    ]
    joints = tuple(Joint(axis, _up(h), (-d(lim), d(lim))) for axis, h, lim in layout)
    return ManipulatorModel(joints, _up(0.045), instrument_length, name="iiwa-like")


# Bent-elbow postures with the shaft pointing roughly straight down.
HOME_CONFIGURATIONS = {
    "generic-7dof": (0.1, 0.3, 0.05, 1.5, 0.1, 1.34, 0.2),
    "iiwa-like": (0.1, 0.5, 0.05, -1.4, 0.1, 1.24, 0.2),
}

BUILTIN_MODELS = {
    "generic-7dof": generic_7dof,
    "iiwa-like": iiwa_like,
}


def builtin_model(name: str, instrument_length: float = DEFAULT_INSTRUMENT_LENGTH) -> ManipulatorModel:
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise ValueError(f"unknown robot model {name!r}; "
                         f"choose from {sorted(BUILTIN_MODELS)}") from None
    return factory(instrument_length)


def model_from_dict(section: dict) -> ManipulatorModel:
    """Build a model from a config ``robot`` section.

    Either ``model = "<builtin>"`` or an explicit ``joints`` list whose entries
    carry ``axis``, ``translation``, ``rotation`` (axis-angle vector) and
    ``limits``; ``ee_translation`` / ``ee_rotation`` describe the flange offset.
    """
    length = float(section.get("instrument_length", DEFAULT_INSTRUMENT_LENGTH))
    if "joints" not in section:
        return builtin_model(section.get("model", "generic-7dof"), length)
    joints = []
    for i, j in enumerate(section["joints"]):
        try:
            origin = make_transform(j.get("translation", (0, 0, 0)),
                                    rotvec_matrix(j.get("rotation", (0, 0, 0))))
            limits = tuple(j.get("limits", (-np.pi, np.pi)))
            joints.append(Joint(j["axis"], origin, limits))
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"robot.joints[{i}]: {exc}") from exc
    ee = make_transform(section.get("ee_translation", (0, 0, 0)),
                        rotvec_matrix(section.get("ee_rotation", (0, 0, 0))))
    return ManipulatorModel(tuple(joints), ee, length, name=section.get("name", "custom"))
