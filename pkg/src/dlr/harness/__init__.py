"""Configuration-driven experiment runner."""
from .config import RunConfig, SweepConfig, load_run_config, load_sweep_config
from .runner import RunError, RunResult, execute, run, sweep

__all__ = ["RunConfig", "SweepConfig", "load_run_config", "load_sweep_config", "RunError", "RunResult",
           "execute", "run", "sweep"]
