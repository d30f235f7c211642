"""Attitude and lateral-thrust setpoint strategies for fully-actuated multirotors."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
