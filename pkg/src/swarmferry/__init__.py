"""Deterministic simulator and optimizers for UAV swarms that provide
capacity-constrained cellular coverage while ferrying DTN traffic between
user clusters."""

from .clustering import CapacitatedMedoids, run_am
from .config import RotationMode, ScenarioConfig
from .sim import RunReport, run, run_baseline, sweep

__version__ = "0.1.0"

__all__ = [
    "CapacitatedMedoids",
    "RotationMode",
    "RunReport",
    "ScenarioConfig",
    "run",
    "run_am",
    "run_baseline",
    "sweep",
    "__version__",
]
