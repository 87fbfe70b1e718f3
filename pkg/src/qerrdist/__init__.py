"""Operator, deviation and correlation figures for quantum measurement errors and disturbances.

Models live on truncated Fock spaces or small spin registers. Every quantity
is evaluated from system-side reductions of Heisenberg-picture operators,
so two-mode oscillator models stay cheap.
"""

__version__ = "0.1.0"

from . import (  # noqa: E402
    appendix_checks,
    classical,
    config,
    distributions,
    errors,
    hilbert,
    measurement,
    metrics,
    oscillator,
    scenarios,
    suprema,
)
from .config import TOL, Tolerances  # noqa: E402
from .distributions import OutcomeDistribution  # noqa: E402
from .measurement import JointMeasurementModel, MeasurementModel, SharpMeasurement  # noqa: E402
from .oscillator import OscillatorRep  # noqa: E402

__all__ = [
    "__version__",
    "TOL",
    "Tolerances",
    "OutcomeDistribution",
    "MeasurementModel",
    "JointMeasurementModel",
    "SharpMeasurement",
    "OscillatorRep",
    "appendix_checks",
    "classical",
    "config",
    "distributions",
    "errors",
    "hilbert",
    "measurement",
    "metrics",
    "oscillator",
    "scenarios",
    "suprema",
]
