"""Adaptive remote-center-of-motion control with force-driven admittance."""

from .control import GainSet, solve_redundancy
from .environment import EnvironmentModel, TrocarTrajectory
from .estimation import EstimatorState, LoadCase, Wrench
from .manipulator import ManipulatorModel, builtin_model, forward_kinematics
from .simulation import ScenarioConfig, SimLog, run_scenario

__all__ = [
    "EnvironmentModel", "EstimatorState", "GainSet", "LoadCase", "ManipulatorModel",
    "ScenarioConfig", "SimLog", "TrocarTrajectory", "Wrench", "builtin_model",
    "forward_kinematics", "run_scenario", "solve_redundancy",
]
