"""Scenario files (TOML) and ``section.key=value`` overrides.

Positions in the ``trocar`` and ``desired`` sections may be absolute or
relative. Relative placements are resolved against the initial pose: the
trocar against the initial RCM point, and the desired path against the
initial instrument point. "perpendicular" means the unit vector normal to the
initial shaft that lies closest to world +x.
"""

from __future__ import annotations

import copy
import sys
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import manipulator, rcm
from .control import GainSet
from .environment import (EnvironmentModel, ExternalLoad, LoadInterval, NoiseModel,
                          TrocarTrajectory)
from .estimation import EstimatorConfig
from .simulation import InstrumentPath, ScenarioConfig, ScenarioError


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"name", "dt", "duration", "seed", "capture_distance", "initial_q", "initial_eta",
             "robot", "gains", "environment", "trocar", "loads", "desired", "estimator"}
_SECTION_KEYS = {
    "robot": {"model", "name", "instrument_length", "joints", "ee_translation", "ee_rotation"},
    "gains": {"k_ins", "k_adm", "eta0", "lambda_dls", "w_gain", "qdot_limit", "f_rcm_desired"},
    "environment": {"k_env", "b_env", "noise"},
    "trocar": {"kind", "center", "offset", "offset_perpendicular", "direction", "amplitude",
               "peak_to_peak", "period", "frequency", "phase", "times", "positions"},
    "desired": {"kind", "start", "end", "displacement", "travel_time", "center", "radius",
                "normal", "frequency", "times", "points"},
    "estimator": {"epsilon_gamma", "epsilon_f", "prior_staleness", "svd_cutoff"},
}


def perpendicular_unit(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    n = d / np.linalg.norm(d)
    for ref in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        u = ref - (ref @ n) * n
        if np.linalg.norm(u) > 1e-6:
            return u / np.linalg.norm(u)
    raise AssertionError("unreachable")


def parse_value(text: str) -> Any:
    """Interpret an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    out = copy.deepcopy(raw)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        *path, leaf = key.strip().split(".")
        node = out
        for part in path:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section")
        node[leaf] = parse_value(value.strip())
    return out


def load_raw(path: str | Path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _vec(value, where: str, n: int = 3) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        v = np.full(n, float(v))
    if v.shape != (n,):
        raise ConfigError(f"{where}: expected {n} numbers, got {value!r}")
    return v


def _direction(value, shaft: np.ndarray, where: str) -> np.ndarray:
    if value is None or value == "perpendicular":
        return perpendicular_unit(shaft)
    if value == "shaft":
        return shaft / np.linalg.norm(shaft)
    v = _vec(value, where)
    if np.linalg.norm(v) == 0:
        raise ConfigError(f"{where}: zero direction")
    return v / np.linalg.norm(v)


def _trocar(sec: dict, x_rcm0: np.ndarray, shaft: np.ndarray) -> TrocarTrajectory:
    kind = sec.get("kind", "static")
    if "center" in sec:
        center = _vec(sec["center"], "trocar.center")
    else:
        center = x_rcm0 + _vec(sec.get("offset", 0.0), "trocar.offset")
    direction = _direction(sec.get("direction"), shaft, "trocar.direction")
    if "offset_perpendicular" in sec:
        center = center + float(sec["offset_perpendicular"]) * perpendicular_unit(shaft)
    if kind == "static":
        return TrocarTrajectory.static(center)
    if kind == "linear_oscillation":
        amplitude = float(sec["amplitude"]) if "amplitude" in sec \
            else float(sec.get("peak_to_peak", 0.02)) / 2.0
        period = float(sec["period"]) if "period" in sec \
            else 1.0 / float(sec.get("frequency", 0.25))
        return TrocarTrajectory(kind=kind, center=center, direction=direction,
                                amplitude=amplitude, period=period,
                                phase=float(sec.get("phase", 0.0)))
    if kind == "custom_samples":
        return TrocarTrajectory(kind=kind, center=center, direction=direction,
                                sample_times=tuple(sec["times"]),
                                sample_positions=np.asarray(sec["positions"], dtype=float))
    raise ConfigError(f"trocar.kind: unknown kind {kind!r}")


def _desired(sec: dict, x_ins0: np.ndarray, shaft: np.ndarray) -> InstrumentPath:
    kind = sec.get("kind", "hold")
    start = _vec(sec["start"], "desired.start") if "start" in sec else x_ins0
    if kind == "hold":
        return InstrumentPath("hold", start)
    if kind == "line":
        end = _vec(sec["end"], "desired.end") if "end" in sec \
            else start + _vec(sec.get("displacement", 0.0), "desired.displacement")
        return InstrumentPath("line", start, end=end,
                              travel_time=float(sec.get("travel_time", 1.0)))
    if kind == "circle":
        normal = _direction(sec.get("normal", "shaft"), shaft, "desired.normal")
        if "center" in sec:
            center = _vec(sec["center"], "desired.center")
        else:
            center = start - float(sec.get("radius", 0.02)) * perpendicular_unit(normal)
        return InstrumentPath("circle", start, center=center, normal=normal,
                              frequency=float(sec.get("frequency", 0.1)))
    if kind == "waypoints":
        return InstrumentPath("waypoints", start, times=tuple(sec["times"]),
                              points=np.asarray(sec["points"], dtype=float))
    raise ConfigError(f"desired.kind: unknown kind {kind!r}")


def _loads(entries) -> ExternalLoad:
    if isinstance(entries, dict):
        entries = [entries]
    intervals = []
    for i, e in enumerate(entries):
        _check_keys(e, {"t_start", "t_end", "force"}, f"loads[{i}]")
        try:
            intervals.append(LoadInterval(float(e["t_start"]), float(e["t_end"]),
                                          _vec(e["force"], f"loads[{i}].force")))
        except KeyError as exc:
            raise ConfigError(f"loads[{i}]: missing key {exc}") from exc
    return ExternalLoad(tuple(intervals), enabled=bool(intervals))


def build_scenario(raw: dict, default_name: str = "scenario") -> ScenarioConfig:
    """Validate a parsed config dictionary and resolve it into a ScenarioConfig."""
    _check_keys(raw, _TOP_KEYS, "<top level>")
    for sec, allowed in _SECTION_KEYS.items():
        if sec in raw:
            if not isinstance(raw[sec], dict):
                raise ConfigError(f"{sec}: expected a table")
            _check_keys(raw[sec], allowed, sec)
    try:
        return _build(raw, default_name)
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(raw: dict, default_name: str) -> ScenarioConfig:
    robot_sec = raw.get("robot", {})
    robot = manipulator.model_from_dict(robot_sec)
    if "initial_q" in raw:
        q0 = _vec(raw["initial_q"], "initial_q", 7)
    elif robot.name in manipulator.HOME_CONFIGURATIONS:
        q0 = np.array(manipulator.HOME_CONFIGURATIONS[robot.name])
    else:
        raise ConfigError("initial_q is required for a custom robot")

    g = dict(raw.get("gains", {}))
    for key in ("k_ins", "f_rcm_desired"):
        if key in g:
            g[key] = _vec(g[key], f"gains.{key}")
    gains = GainSet(**g)

    eta0 = float(raw.get("initial_eta", gains.eta0))
    kin = manipulator.evaluate(robot, q0)
    x_rcm0 = rcm.rcm_position(kin.x_ee, kin.x_ins, eta0)

    env_sec = raw.get("environment", {})
    env = EnvironmentModel(
        **{k: _vec(env_sec[k], f"environment.{k}") for k in ("k_env", "b_env") if k in env_sec})
    noise_sec = env_sec.get("noise", {})
    _check_keys(noise_sec, {"force_std", "moment_std"}, "environment.noise")
    noise = NoiseModel(float(noise_sec.get("force_std", 0.0)),
                       float(noise_sec.get("moment_std", 0.0)))

    try:
        return ScenarioConfig(
            name=str(raw.get("name", default_name)),
            robot=robot,
            initial_q=q0,
            initial_eta=eta0,
            gains=gains,
            environment=env,
            trocar=_trocar(raw.get("trocar", {}), x_rcm0, kin.d_ins),
            desired=_desired(raw.get("desired", {}), kin.x_ins, kin.d_ins),
            loads=_loads(raw.get("loads", [])),
            noise=noise,
            estimator=EstimatorConfig(**raw.get("estimator", {})),
            dt=float(raw.get("dt", 1e-3)),
            duration=float(raw.get("duration", 10.0)),
            seed=int(raw.get("seed", 0)),
            capture_distance=float(raw.get("capture_distance", 0.02)),
        )
    except ScenarioError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path: str | Path, overrides: list[str] = ()) -> ScenarioConfig:
    raw = apply_overrides(load_raw(path), list(overrides))
    return build_scenario(raw, default_name=Path(path).stem)
