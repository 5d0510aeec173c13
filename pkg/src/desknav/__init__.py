"""Deterministic 2D navigation simulation: kinematics, mapping, MCL, planning, reactive control."""
from importlib.resources import files

from .kinematics import Pose2D, RobotParams, Twist2D, WheelRates

__all__ = ["Pose2D", "RobotParams", "Twist2D", "WheelRates", "scenario_path"]
__version__ = "0.1.0"


def scenario_path(name: str):
    """Path of a bundled scenario document, e.g. ``scenario_path("corridor")``."""
    if not name.endswith(".yaml"):
        name += ".yaml"
    return files(__name__) / "scenarios" / name
