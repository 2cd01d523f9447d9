"""Numerical continuation of finite-time blowup through infinity, for ODEs and a 1D PDE."""

from .blowup_protocol import CrossingRecord, ProtocolError, cross_infinity, detect_power_law
from .kernels import BACKEND
from .ode_engine import IntegratorConfig, OdeProblem, integrate_until

__all__ = [
    "BACKEND",
    "CrossingRecord",
    "IntegratorConfig",
    "OdeProblem",
    "ProtocolError",
    "cross_infinity",
    "detect_power_law",
    "integrate_until",
]

__version__ = "0.1.0"
