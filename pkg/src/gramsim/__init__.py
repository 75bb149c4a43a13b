"""Counter-based multicast forwarding simulator with a PIT baseline."""
from .config import ConfigError, ScenarioConfig, load_config
from .engine import RunReport, Scenario, SimulationError, build_scenario, run
from .metrics import InsufficientDataError, SweepSpec, run_sweep, summarize

__all__ = [
    "ConfigError", "ScenarioConfig", "load_config",
    "RunReport", "Scenario", "SimulationError", "build_scenario", "run",
    "InsufficientDataError", "SweepSpec", "run_sweep", "summarize",
]
