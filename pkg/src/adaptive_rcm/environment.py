"""Ground-truth world for simulation: trocar motion, tissue force, sensor reading.

Nothing in this module is visible to the controller except through the
synthesized F/T measurement.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .estimation import SENSOR, WORLD, Wrench
from .manipulator import cross


@dataclass(frozen=True)
class EnvironmentModel:
    """Diagonal spring-damper between the trocar and the RCM point.

    Defaults are a stiffness of 500 N/m and damping of 2 N*s/m per axis. The
    damper reads the RCM velocity realized over the previous tick, so the loop
    needs ``k_adm * b_env < 1`` to stay stable.
    """

    k_env: np.ndarray = field(default_factory=lambda: np.full(3, 500.0))
    b_env: np.ndarray = field(default_factory=lambda: np.full(3, 2.0))

    def __post_init__(self):
        for name in ("k_env", "b_env"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.ndim == 0:
                v = np.full(3, float(v))
            elif v.ndim == 2:
                v = np.diag(v)
            if v.shape != (3,) or np.any(v < 0):
                raise ValueError(f"{name} needs three non-negative diagonal entries")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class TrocarTrajectory:
    """Trocar motion: ``static``, ``linear_oscillation`` or ``custom_samples``.

    The oscillation is ``center + amplitude * sin(2 pi t / period + phase) * direction``,
    so its peak-to-peak travel is twice the amplitude. Custom samples are
    linearly interpolated and held after the last sample.
    """

    kind: str = "static"
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    amplitude: float = 0.0
    period: float = 1.0
    phase: float = 0.0
    sample_times: tuple[float, ...] = ()
    sample_positions: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("static", "linear_oscillation", "custom_samples"):
            raise ValueError(f"unknown trocar trajectory kind {self.kind!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        d = np.asarray(self.direction, dtype=float)
        if np.linalg.norm(d) == 0.0:
            raise ValueError("trocar direction must be nonzero")
        object.__setattr__(self, "direction", d / np.linalg.norm(d))
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.kind == "linear_oscillation" and not self.period > 0:
            raise ValueError("period must be positive")
        if self.kind == "custom_samples":
            times = tuple(float(t) for t in self.sample_times)
            pos = np.asarray(self.sample_positions, dtype=float)
            if len(times) == 0 or pos.shape != (len(times), 3):
                raise ValueError("custom_samples needs matching times and (N, 3) positions")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("sample times must be strictly increasing")
            object.__setattr__(self, "sample_times", times)
            object.__setattr__(self, "sample_positions", pos)

    @classmethod
    def static(cls, position: Sequence[float]) -> "TrocarTrajectory":
        return cls(kind="static", center=np.asarray(position, dtype=float))

    @classmethod
    def breathing(cls, center, direction, peak_to_peak: float = 0.02,
                  frequency: float = 0.25) -> "TrocarTrajectory":
        return cls(kind="linear_oscillation", center=np.asarray(center, dtype=float),
                   direction=np.asarray(direction, dtype=float),
                   amplitude=peak_to_peak / 2.0, period=1.0 / frequency)


def trocar_state(traj: TrocarTrajectory, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity of the trocar at time ``t``."""
    if t < 0:
        raise ValueError(f"negative time {t}")
    if traj.kind == "static":
        return traj.center.copy(), np.zeros(3)
    if traj.kind == "linear_oscillation":
        w = 2.0 * np.pi / traj.period
        arg = w * t + traj.phase
        pos = traj.center + traj.amplitude * np.sin(arg) * traj.direction
        vel = traj.amplitude * w * np.cos(arg) * traj.direction
        return pos, vel
    times, pos = traj.sample_times, traj.sample_positions
    if t < times[0]:
        raise ValueError(f"t={t} precedes the first trocar sample at {times[0]}")
    if t >= times[-1]:
        return pos[-1].copy(), np.zeros(3)
    k = bisect.bisect_right(times, t) - 1
    span = times[k + 1] - times[k]
    vel = (pos[k + 1] - pos[k]) / span
    return pos[k] + (t - times[k]) * vel, vel


@dataclass(frozen=True)
class LoadInterval:
    t_start: float
    t_end: float
    force: np.ndarray

    def __post_init__(self):
        if self.t_end < self.t_start:
            raise ValueError("load interval ends before it starts")
        f = np.asarray(self.force, dtype=float)
        if f.shape != (3,):
            raise ValueError("load force must be a 3-vector")
        object.__setattr__(self, "force", f)


@dataclass(frozen=True)
class ExternalLoad:
    """Piecewise-constant force at the instrument wrist center; active on [t_start, t_end)."""

    intervals: tuple[LoadInterval, ...] = ()
    enabled: bool = True

    def force_at(self, t: float) -> np.ndarray:
        f = np.zeros(3)
        if self.enabled:
            for iv in self.intervals:
                if iv.t_start <= t < iv.t_end:
                    f = f + iv.force
        return f

    def active(self, t: float) -> bool:
        return bool(np.any(self.force_at(t) != 0.0))


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian noise per channel, added in the sensor frame."""

    force_std: float = 0.0
    moment_std: float = 0.0

    @property
    def enabled(self) -> bool:
        return self.force_std > 0 or self.moment_std > 0


def rcm_interaction_force(env: EnvironmentModel, x_trocar, x_rcm, x_dot_trocar,
                          x_dot_rcm) -> np.ndarray:
    """Force the tissue exerts on the shaft at the RCM: spring plus damper toward the trocar."""
    x_e = np.asarray(x_trocar, dtype=float) - np.asarray(x_rcm, dtype=float)
    v_e = np.asarray(x_dot_trocar, dtype=float) - np.asarray(x_dot_rcm, dtype=float)
    return env.k_env * x_e + env.b_env * v_e


def synthesize_base_wrench(f_rcm, f_ins, d_ins, eta: float, noise: NoiseModel | None = None,
                           rng: np.random.Generator | None = None,
                           R_world_sensor: np.ndarray | None = None) -> Wrench:
    """Static-equilibrium wrench at the IDM base for loads on the shaft.

    With no rotation given the result is in the world frame; otherwise it is
    expressed in the sensor frame and noise (if any) is added there.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta!r}")
    f_rcm = np.asarray(f_rcm, dtype=float)
    f_ins = np.asarray(f_ins, dtype=float)
    d = np.asarray(d_ins, dtype=float)
    f_b = -(f_rcm + f_ins)
    m_b = -(cross(eta * d, f_rcm) + cross(d, f_ins))
    frame = WORLD
    if R_world_sensor is not None:
        f_b, m_b = R_world_sensor.T @ f_b, R_world_sensor.T @ m_b
        frame = SENSOR
    if noise is not None and noise.enabled:
        if rng is None:
            raise ValueError("noisy synthesis needs a random generator")
        f_b = f_b + rng.normal(0.0, noise.force_std, 3)
        m_b = m_b + rng.normal(0.0, noise.moment_std, 3)
    return Wrench(f_b, m_b, frame)
