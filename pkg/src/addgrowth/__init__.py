"""Growth functionals, growth indices and Monte Carlo checks for processes
with additive (independent, time-inhomogeneous) increments."""

from .process_spec import ProcessSpec, Component
from .specfile import load, loads, builtin_names

__all__ = ["ProcessSpec", "Component", "load", "loads", "builtin_names"]
__version__ = "0.1.0"
