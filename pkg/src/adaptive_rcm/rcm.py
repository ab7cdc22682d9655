"""Remote-center-of-motion point and the augmented Jacobian over (q, eta).

The RCM is parameterized as a point on the instrument shaft between the
end-effector and the instrument wrist center, located by the interpolation
variable ``eta``. Treating ``eta`` as an extra coordinate gives an 8-column
system: 3 rows for the instrument point and 3 rows for the RCM point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

ETA_DEFAULT = 0.25
ETA_CLAMP = (0.02, 0.98)


class CorruptStateError(ValueError):
    """An interpolation variable left the open interval (0, 1)."""


@dataclass(frozen=True)
class ExtendedState:
    q: np.ndarray
    eta: float

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.shape != (7,):
            raise ValueError(f"q must have shape (7,), got {q.shape}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        _check_eta(self.eta)
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def vector(self) -> np.ndarray:
        return np.append(self.q, self.eta)


@dataclass(frozen=True)
class RcmGeometry:
    x_ee: np.ndarray
    x_ins: np.ndarray
    d_ins: np.ndarray
    x_rcm: np.ndarray

    @classmethod
    def from_points(cls, x_ee, x_ins, eta: float) -> "RcmGeometry":
        x_ee = np.asarray(x_ee, dtype=float)
        x_ins = np.asarray(x_ins, dtype=float)
        d = x_ins - x_ee
        if not np.linalg.norm(d) > 0.0:
            raise ValueError("end-effector and instrument points coincide")
        return cls(x_ee, x_ins, d, x_ee + eta * d)


def _check_eta(eta: float) -> None:
    if not 0.0 < eta < 1.0:
        raise CorruptStateError(f"eta must lie in (0, 1), got {eta!r}")


def clamp_eta(eta: float, bounds: tuple[float, float] = ETA_CLAMP) -> float:
    lo, hi = bounds
    if eta < lo or eta > hi:
        clamped = min(max(eta, lo), hi)
        log.warning("eta %.6f clamped to %.2f", eta, clamped)
        return clamped
    return eta


def rcm_position(x_ee, x_ins, eta: float) -> np.ndarray:
    """Point at fraction ``eta`` of the way from ``x_ee`` to ``x_ins``."""
    _check_eta(eta)
    x_ee = np.asarray(x_ee, dtype=float)
    return x_ee + eta * (np.asarray(x_ins, dtype=float) - x_ee)


def jacobian_rcm(J_ee: np.ndarray, J_ins: np.ndarray, d_ins, eta: float) -> np.ndarray:
    """3x8 map from (q_dot, eta_dot) to the RCM point velocity."""
    J = np.empty((3, 8))
    J[:, :7] = J_ee + eta * (J_ins - J_ee)
    J[:, 7] = d_ins
    return J


def total_jacobian(J_ins: np.ndarray, J_rcm: np.ndarray) -> np.ndarray:
    """Stack the instrument rows (blind to eta_dot) over the RCM rows."""
    J = np.zeros((6, 8))
    J[:3, :7] = J_ins
    J[3:, :] = J_rcm
    return J
