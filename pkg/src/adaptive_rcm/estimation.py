"""RCM force estimation from a single F/T measurement at the IDM base.

Two loading cases are considered: a single force at the RCM, or an RCM force
together with a force at the instrument wrist center. The location criterion
``gamma_hat`` (moment over lever-arm moment) says where a single force would
have to act to explain the measurement; when it sits near ``eta`` the
measurement is attributed to the RCM alone.

In the two-force case the equilibrium matrix is rank 5. Its one-dimensional
null space is an equal-and-opposite pair of shaft-parallel forces, which the
estimator resolves by staying as close as possible to a trusted prior.

Moments are taken about the end-effector point, which is also the sensor
origin. All arithmetic happens in the world frame.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .manipulator import cross, skew

log = logging.getLogger(__name__)

WORLD = "world"
SENSOR = "sensor"


class EstimationGeometryError(ValueError):
    pass


class LoadCase(enum.Enum):
    SINGLE_RCM = "SingleRcm"
    RCM_PLUS_INSTRUMENT = "RcmPlusInstrument"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    moment: np.ndarray
    frame: str = WORLD

    def __post_init__(self):
        f = np.array(self.force, dtype=float)
        m = np.array(self.moment, dtype=float)
        if f.shape != (3,) or m.shape != (3,):
            raise ValueError("force and moment must be 3-vectors")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(m))):
            raise ValueError("wrench entries must be finite")
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "moment", m)

    def rotated(self, R: np.ndarray, frame: str) -> "Wrench":
        """Re-express both vectors with rotation ``R`` (same reference point)."""
        return Wrench(R @ self.force, R @ self.moment, frame)

    def to_world(self, R_world_sensor: np.ndarray) -> "Wrench":
        if self.frame == WORLD:
            return self
        return self.rotated(R_world_sensor, WORLD)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.moment])


@dataclass(frozen=True)
class EstimatorConfig:
    epsilon_gamma: float = 0.05
    epsilon_f: float = 1e-3
    prior_staleness: float = 0.5
    svd_cutoff: float = 1e-8


def gamma_criterion(wrench: Wrench, d_ins, epsilon_f: float = 1e-3) -> float | None:
    """Estimated load location as a fraction of the shaft vector, or None.

    None means the lever-arm moment ``|d_ins x f|`` is below ``epsilon_f``:
    the force is zero or parallel to the shaft and its location is unobservable.
    """
    lever = np.linalg.norm(cross(d_ins, wrench.force))
    if lever < epsilon_f:
        return None
    return float(np.linalg.norm(wrench.moment) / lever)


def classify_case(gamma_hat: float | None, eta: float, epsilon_gamma: float = 0.05) -> LoadCase:
    if gamma_hat is None:
        return LoadCase.INCONCLUSIVE
    if abs(gamma_hat - eta) <= epsilon_gamma:
        return LoadCase.SINGLE_RCM
    return LoadCase.RCM_PLUS_INSTRUMENT


def axial_moment(wrench: Wrench, d_ins) -> float:
    """Moment component along the shaft; zero whenever all loads act on the shaft line.

    Reported as a diagnostic only, it never feeds the classifier.
    """
    d = np.asarray(d_ins, dtype=float)
    return float(wrench.moment @ d / np.linalg.norm(d))


def estimate_case1(wrench: Wrench) -> np.ndarray:
    return -wrench.force


def build_gamma_matrix(d_ins, eta: float) -> np.ndarray:
    """6x6 map from (f_ins, f_rcm) to the negated base wrench."""
    D = skew(np.asarray(d_ins, dtype=float))
    G = np.zeros((6, 6))
    G[:3, :3] = np.eye(3)
    G[:3, 3:] = np.eye(3)
    G[3:, :3] = D
    G[3:, 3:] = eta * D
    return G


def truncated_pinv(A: np.ndarray, cutoff: float = 1e-8) -> tuple[np.ndarray, int]:
    """SVD pseudoinverse dropping singular values below ``cutoff * s_max``; also returns rank."""
    U, s, Vt = np.linalg.svd(A)
    keep = s > cutoff * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T, int(keep.sum())


def estimate_case2(wrench: Wrench, d_ins, eta: float, prior=None,
                   svd_cutoff: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(f_ins_hat, f_rcm_hat)``.

    The estimate is the equilibrium-consistent solution closest to ``prior``
    (a stacked ``(f_ins, f_rcm)`` 6-vector): ``G+ xi + (I - G+ G) prior``.
    """
    if prior is None:
        log.warning("no prior for two-force estimate; anchoring at zero")
        prior = np.zeros(6)
    Gam = build_gamma_matrix(d_ins, eta)
    G_pinv, rank = truncated_pinv(Gam, svd_cutoff)
    if rank < 5:
        raise EstimationGeometryError(f"force estimation matrix has rank {rank} < 5")
    xi = -wrench.vector
    f_hat = G_pinv @ xi + (np.eye(6) - G_pinv @ Gam) @ np.asarray(prior, dtype=float)
    return f_hat[:3], f_hat[3:]


@dataclass
class EstimatorState:
    """Per-run estimator memory, advanced once per control tick."""

    config: EstimatorConfig = field(default_factory=EstimatorConfig)
    gamma_hat: float | None = None
    case: LoadCase = LoadCase.INCONCLUSIVE
    active_case: LoadCase = LoadCase.SINGLE_RCM
    f_rcm_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    f_ins_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prior: np.ndarray = field(default_factory=lambda: np.zeros(6))
    prior_time: float = 0.0

    def prior_age(self, t: float) -> float:
        return t - self.prior_time

    def update(self, wrench: Wrench, d_ins, eta: float, t: float) -> np.ndarray:
        """Classify the measurement, estimate, refresh the prior; return ``f_rcm_hat``.

        An inconclusive criterion keeps the last conclusive case and applies
        its estimator to the current measurement.
        """
        cfg = self.config
        self.gamma_hat = gamma_criterion(wrench, d_ins, cfg.epsilon_f)
        self.case = classify_case(self.gamma_hat, eta, cfg.epsilon_gamma)
        if self.case is not LoadCase.INCONCLUSIVE:
            self.active_case = self.case

        if self.active_case is LoadCase.SINGLE_RCM:
            self.f_rcm_hat = estimate_case1(wrench)
            self.f_ins_hat = np.zeros(3)
            if self.case is LoadCase.SINGLE_RCM:
                self._set_prior(t)
        else:
            self.f_ins_hat, self.f_rcm_hat = estimate_case2(
                wrench, d_ins, eta, self.prior, cfg.svd_cutoff)
            if self.prior_age(t) >= cfg.prior_staleness:
                self._set_prior(t)
        return self.f_rcm_hat

    def _set_prior(self, t: float) -> None:
        self.prior = np.concatenate([self.f_ins_hat, self.f_rcm_hat])
        self.prior_time = t
