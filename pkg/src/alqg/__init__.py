"""Adaptive LQG control under stabilizability: weighted least squares with
random regularization, certainty-equivalence Riccati feedback and diminishing
excitation, plus the simulator used to check it."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
