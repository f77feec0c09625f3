"""Dual-radio vehicular white-space simulator.

Simulates platoons that exchange control traffic on a 5.9 GHz control
channel and cooperative-driving traffic on periodically re-allocated TV
white-space channels, with terrestrial-TV protection enforced through a
radio environment map.
"""

from .engine import MetricsStore, SimulationConfig, reception_ratio, run, sir_ecdf
from .errors import VdsaError

__version__ = "0.1.0"

__all__ = [
    "MetricsStore",
    "SimulationConfig",
    "VdsaError",
    "__version__",
    "reception_ratio",
    "run",
    "sir_ecdf",
]
