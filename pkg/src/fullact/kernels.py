"""Backend selection for the integrator kernel.

The compiled extension is used when it was built; otherwise the pure-Python
version with the same signature is imported.
"""
try:
    from ._kernels import rk4_steps
    BACKEND = "cython"
except ImportError:  # extension not built
    from ._kernels_py import rk4_steps
    BACKEND = "python"

from ._kernels_py import N_STATE

__all__ = ["rk4_steps", "BACKEND", "N_STATE"]
