"""Fixed-step closed-loop simulation of the adaptive RCM controller.

Each tick runs: kinematics, true tissue and tip forces, base wrench synthesis,
force estimation, the admittance/position command, redundancy resolution and
an explicit Euler update of (q, eta). The controller sees forces only through
the estimator and never sees the trocar state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import control, manipulator, rcm
from .control import GainSet
from .environment import (EnvironmentModel, ExternalLoad, NoiseModel, TrocarTrajectory,
                          rcm_interaction_force, synthesize_base_wrench, trocar_state)
from .estimation import EstimatorConfig, EstimatorState, LoadCase, Wrench
from .manipulator import ManipulatorModel

log = logging.getLogger(__name__)

MAX_DT = 0.01


class ScenarioError(ValueError):
    """The scenario is malformed or ill-posed."""


class SimulationError(RuntimeError):
    def __init__(self, t: float, cause: Exception):
        super().__init__(f"simulation failed at t={t:.6f} s: {cause}")
        self.t = t
        self.__cause__ = cause


@dataclass(frozen=True)
class InstrumentPath:
    """Desired instrument wrist-center position over time.

    ``hold`` stays at ``start``. ``line`` travels from ``start`` to ``end`` in
    ``travel_time`` seconds, then holds. ``circle`` starts at ``start`` and
    runs around ``center`` at ``frequency`` Hz in the plane normal to
    ``normal``. ``waypoints`` interpolates linearly between timed points.
    """

    kind: str = "hold"
    start: np.ndarray = field(default_factory=lambda: np.zeros(3))
    end: np.ndarray | None = None
    travel_time: float = 1.0
    center: np.ndarray | None = None
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    frequency: float = 0.1
    times: tuple[float, ...] = ()
    points: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("hold", "line", "circle", "waypoints"):
            raise ScenarioError(f"unknown instrument trajectory kind {self.kind!r}")
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        if self.kind == "line":
            if self.end is None or not self.travel_time > 0:
                raise ScenarioError("line trajectory needs 'end' and a positive 'travel_time'")
            object.__setattr__(self, "end", np.asarray(self.end, dtype=float))
        if self.kind == "circle":
            if self.center is None:
                raise ScenarioError("circle trajectory needs a 'center'")
            c = np.asarray(self.center, dtype=float)
            n = np.asarray(self.normal, dtype=float)
            n = n / np.linalg.norm(n)
            r0 = self.start - c
            r0 = r0 - (r0 @ n) * n
            if np.linalg.norm(r0) == 0.0:
                raise ScenarioError("circle start coincides with its center")
            object.__setattr__(self, "center", c)
            object.__setattr__(self, "normal", n)
        if self.kind == "waypoints":
            pts = np.asarray(self.points, dtype=float)
            times = tuple(float(t) for t in self.times)
            if len(times) == 0 or pts.shape != (len(times), 3):
                raise ScenarioError("waypoints need matching 'times' and (N, 3) 'points'")
            object.__setattr__(self, "times", times)
            object.__setattr__(self, "points", pts)

    @property
    def radius(self) -> float:
        r0 = self.start - self.center
        return float(np.linalg.norm(r0 - (r0 @ self.normal) * self.normal))

    def position(self, t: float) -> np.ndarray:
        if self.kind == "hold":
            return self.start.copy()
        if self.kind == "line":
            s = min(max(t / self.travel_time, 0.0), 1.0)
            return self.start + s * (self.end - self.start)
        if self.kind == "circle":
            # rotate the start offset about the normal (Rodrigues); axial part stays put
            r0 = self.start - self.center
            R = manipulator.axis_angle_matrix(self.normal, 2.0 * np.pi * self.frequency * t)
            return self.center + R @ r0
        return np.array([np.interp(t, self.times, self.points[:, k]) for k in range(3)])


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    robot: ManipulatorModel
    initial_q: np.ndarray
    initial_eta: float
    gains: GainSet
    environment: EnvironmentModel
    trocar: TrocarTrajectory
    desired: InstrumentPath
    loads: ExternalLoad = field(default_factory=ExternalLoad)
    noise: NoiseModel = field(default_factory=NoiseModel)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    dt: float = 1e-3
    duration: float = 10.0
    seed: int = 0
    capture_distance: float = 0.02

    def __post_init__(self):
        q = np.asarray(self.initial_q, dtype=float)
        if q.shape != (7,):
            raise ScenarioError("initial_q must have 7 entries")
        object.__setattr__(self, "initial_q", q)
        if not 0.0 < self.initial_eta < 1.0:
            raise ScenarioError("initial_eta must lie in (0, 1)")
        if not 0.0 < self.dt <= MAX_DT:
            raise ScenarioError(f"dt must lie in (0, {MAX_DT}]")
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def with_gains(self, **changes) -> "ScenarioConfig":
        return replace(self, gains=replace(self.gains, **changes))


@dataclass(frozen=True)
class SimState:
    """Extended configuration plus the rates commanded on the previous tick."""

    q: np.ndarray
    eta: float
    q_dot: np.ndarray = field(default_factory=lambda: np.zeros(7))
    eta_dot: float = 0.0

    @property
    def extended(self) -> rcm.ExtendedState:
        return rcm.ExtendedState(self.q, self.eta)


# Column layout of a log; vector fields expand to several columns.
LOG_FIELDS: dict[str, int] = {
    "t": 1, "q": 7, "eta": 1,
    "x_ee": 3, "x_ins": 3, "x_rcm": 3, "x_trocar": 3, "x_desired": 3,
    "f_rcm": 3, "f_ins": 3, "f_rcm_hat": 3, "f_ins_hat": 3,
    "gamma_hat": 1, "e_rcm": 1, "e_ins": 1,
    "q_dot": 7, "eta_dot": 1, "wrench_force": 3, "wrench_moment": 3,
    "null_residual": 1,
}


@dataclass
class StepRecord:
    t: float
    q: np.ndarray
    eta: float
    x_ee: np.ndarray
    x_ins: np.ndarray
    x_rcm: np.ndarray
    x_trocar: np.ndarray
    x_desired: np.ndarray
    f_rcm: np.ndarray
    f_ins: np.ndarray
    f_rcm_hat: np.ndarray
    f_ins_hat: np.ndarray
    gamma_hat: float  # nan when the criterion is undefined
    case: LoadCase
    e_rcm: float
    e_ins: float
    q_dot: np.ndarray
    eta_dot: float
    wrench: Wrench  # as measured, in the sensor frame
    null_residual: float  # |J_total @ null-space step|


class SimLog:
    """Column store of per-step records on a uniform time grid."""

    def __init__(self, name: str, n: int):
        self.name = name
        self.columns = {k: np.zeros((n, w)) if w > 1 else np.zeros(n)
                        for k, w in LOG_FIELDS.items()}
        self.case = np.empty(n, dtype=object)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def __getattr__(self, item):
        cols = self.__dict__.get("columns", {})
        if item in cols:
            return cols[item][: self.__dict__["_n"]]
        raise AttributeError(item)

    def append(self, rec: StepRecord) -> None:
        i = self._n
        c = self.columns
        for key in LOG_FIELDS:
            if key in ("wrench_force", "wrench_moment", "null_residual"):
                continue
            c[key][i] = getattr(rec, key)
        c["wrench_force"][i] = rec.wrench.force
        c["wrench_moment"][i] = rec.wrench.moment
        c["null_residual"][i] = rec.null_residual
        self.case[i] = rec.case.value
        self._n += 1

    @property
    def cases(self) -> np.ndarray:
        return self.case[: self._n]

    @classmethod
    def from_columns(cls, name: str, columns: dict[str, np.ndarray], cases) -> "SimLog":
        n = len(columns["t"])
        out = cls(name, n)
        for k in LOG_FIELDS:
            out.columns[k] = np.array(columns[k], dtype=float)
        out.case = np.array(list(cases), dtype=object)
        out._n = n
        return out


@dataclass(frozen=True)
class Geometry:
    kin: manipulator.Kinematics
    x_rcm: np.ndarray
    J_rcm: np.ndarray
    J_total: np.ndarray

    @property
    def d_ins(self) -> np.ndarray:
        return self.kin.d_ins


def geometry(model: ManipulatorModel, q, eta: float) -> Geometry:
    kin = manipulator.evaluate(model, q)
    x_rcm = rcm.rcm_position(kin.x_ee, kin.x_ins, eta)
    J_rcm = rcm.jacobian_rcm(kin.J_ee, kin.J_ins, kin.d_ins, eta)
    return Geometry(kin, x_rcm, J_rcm, rcm.total_jacobian(kin.J_ins, J_rcm))


def step(state: SimState, scenario: ScenarioConfig, estimator: EstimatorState, t: float,
         rng: np.random.Generator | None = None) -> tuple[SimState, StepRecord]:
    """Advance one control tick of length ``scenario.dt``."""
    geo = geometry(scenario.robot, state.q, state.eta)
    kin = geo.kin
    d = geo.d_ins

    # truth: the damper sees the RCM velocity realized by last tick's command
    x_dot_rcm = geo.J_rcm @ np.append(state.q_dot, state.eta_dot)
    x_tr, v_tr = trocar_state(scenario.trocar, t)
    f_rcm = rcm_interaction_force(scenario.environment, x_tr, geo.x_rcm, v_tr, x_dot_rcm)
    f_ins = scenario.loads.force_at(t)
    measured = synthesize_base_wrench(f_rcm, f_ins, d, state.eta, scenario.noise, rng,
                                      R_world_sensor=kin.R_ee)

    f_rcm_hat = estimator.update(measured.to_world(kin.R_ee), d, state.eta, t)
    x_des = scenario.desired.position(t)
    cmd = control.compute_command(geo.J_total, kin.x_ins, x_des, f_rcm_hat, d, state.eta,
                                  scenario.gains)

    record = StepRecord(
        t=t, q=state.q, eta=state.eta,
        x_ee=kin.x_ee, x_ins=kin.x_ins, x_rcm=geo.x_rcm,
        x_trocar=x_tr, x_desired=x_des,
        f_rcm=f_rcm, f_ins=f_ins,
        f_rcm_hat=estimator.f_rcm_hat.copy(), f_ins_hat=estimator.f_ins_hat.copy(),
        gamma_hat=np.nan if estimator.gamma_hat is None else estimator.gamma_hat,
        case=estimator.case,
        e_rcm=float(np.linalg.norm(x_tr - geo.x_rcm)),
        e_ins=float(np.linalg.norm(x_des - kin.x_ins)),
        q_dot=cmd.q_dot, eta_dot=cmd.eta_dot, wrench=measured,
        null_residual=float(np.linalg.norm(geo.J_total @ cmd.null_step)),
    )
    dt = scenario.dt
    next_state = SimState(
        q=state.q + cmd.q_dot * dt,
        eta=rcm.clamp_eta(state.eta + cmd.eta_dot * dt),
        q_dot=cmd.q_dot,
        eta_dot=cmd.eta_dot,
    )
    return next_state, record


def check_well_posed(scenario: ScenarioConfig) -> None:
    geo = geometry(scenario.robot, scenario.initial_q, scenario.initial_eta)
    try:
        x_tr, _ = trocar_state(scenario.trocar, 0.0)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    gap = float(np.linalg.norm(x_tr - geo.x_rcm))
    if gap > scenario.capture_distance:
        raise ScenarioError(
            f"initial RCM is {gap * 1e3:.2f} mm from the trocar, beyond the capture "
            f"distance of {scenario.capture_distance * 1e3:.2f} mm")


def run_scenario(scenario: ScenarioConfig) -> SimLog:
    check_well_posed(scenario)
    rng = np.random.default_rng(scenario.seed)
    estimator = EstimatorState(scenario.estimator)
    state = SimState(scenario.initial_q.copy(), scenario.initial_eta)
    n = scenario.n_steps
    out = SimLog(scenario.name, n)
    for k in range(n):
        t = k * scenario.dt
        try:
            state, rec = step(state, scenario, estimator, t, rng)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SimulationError(t, exc) from exc
        out.append(rec)
    return out
