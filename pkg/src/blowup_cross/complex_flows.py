"""Complexified quadratic and cubic flows: closed-form orbits, the circle invariant and return times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ode_engine import IntegratorConfig, OdeProblem, integrate_until


class DegenerateOrbit(ValueError):
    """The orbit lies on the real axis, where E and R are undefined."""


class TransitionTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class ComplexState:
    x: float
    y: float

    def __post_init__(self):
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("complex state must be finite")

    @property
    def z(self):
        return self.x + 1j * self.y


@dataclass(frozen=True)
class OrbitGeometry:
    E: float
    R: float
    center_y: float

    def circle_residual(self, x, y):
        """``x**2 + (y - center_y)**2 - R**2``, expanded to avoid cancellation for large R."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return x * x + y * y - 2.0 * y * self.center_y


def analytic_quad_orbit(t, x0: float, y0: float) -> ComplexState:
    """Exact solution of dz/dt = z**2, written out in real and imaginary parts."""
    if x0 == 0 and y0 == 0:
        raise ValueError("the origin is a fixed point; pick a nonzero start")
    t = np.asarray(t, dtype=float)
    m2 = x0 * x0 + y0 * y0
    a = x0 - t * m2
    den = a * a + y0 * y0
    if np.any(den == 0):
        raise ZeroDivisionError("real orbit reaches its pole at t = 1/x0")
    return ComplexState((x0 * m2 - t * m2 * m2) / den, y0 * m2 / den)


def analytic_cubic_orbit(t, x0: float, y0: float) -> ComplexState:
    """dz/dt = z**3 via ``z = sqrt(1/(1/z0**2 - 2t))`` on the principal branch.

    Only trustworthy while the orbit stays off the branch cut of the
    square root, i.e. for starts in the open right half-plane.
    """
    z0 = complex(x0, y0)
    if z0 == 0:
        raise ValueError("the origin is a fixed point; pick a nonzero start")
    w = 1.0 / z0 ** 2 - 2.0 * np.asarray(t, dtype=float)
    if np.any(w == 0):
        raise ZeroDivisionError("real orbit reaches its pole")
    z = np.sqrt(1.0 / w.astype(complex))
    return ComplexState(z.real, z.imag)


def invariant_E(state: ComplexState):
    y = np.asarray(state.y, dtype=float)
    if np.any(y == 0):
        raise DegenerateOrbit("E = (x^2 + y^2)/y is undefined on the real axis")
    return (np.asarray(state.x) ** 2 + y * y) / y


def orbit_geometry(x0: float, y0: float) -> OrbitGeometry:
    if y0 == 0:
        raise DegenerateOrbit("real start: the orbit circle has infinite radius")
    E = (x0 * x0 + y0 * y0) / y0
    R = abs(E) / 2.0
    return OrbitGeometry(E, R, math.copysign(R, y0))


def loop_period(x0: float, y0: float) -> float:
    """Time window [0, 4/|z0|**2] used as "one loop" of the quadratic flow."""
    return 4.0 / (x0 * x0 + y0 * y0)


def integrate_quadratic(x0, y0, t_end, config: IntegratorConfig | None = None):
    from .ode_engine import time_reached

    config = config or IntegratorConfig()
    return integrate_until(OdeProblem.complex_quadratic(x0, y0), config, time_reached(t_end))


def integrate_cubic(x0, y0, t_end, config: IntegratorConfig | None = None):
    from .ode_engine import time_reached

    config = config or IntegratorConfig()
    return integrate_until(OdeProblem.complex_cubic(x0, y0), config, time_reached(t_end))


def _arrival_event(degree, R, eps):
    if degree == 3:
        def g(t, s):
            # |x| <= eps |y|, with a scale so the residual is dimensionless
            return (eps * abs(s[1]) - abs(s[0])) / R

        return g

    def g(t, s):
        x, y = s
        # arrival on the return leg: left half-plane, inside the |y| <= |x| cone,
        # and within R*eps of -R
        if x >= 0 or abs(y) > abs(x):
            return -1.0
        return (x + R * (1.0 + eps)) / R

    return g


def transition_time(R: float, eps: float, degree: int = 2, config: IntegratorConfig | None = None,
                    eps_mode: str = "relative") -> float:
    """Time for the complexified orbit from ``(R, e)`` to come back around infinity.

    ``e`` is ``eps*R`` when ``eps_mode`` is ``"relative"`` and ``eps`` otherwise;
    it is both the starting imaginary part and the width of the arrival gate.
    Degree 3 stops at the imaginary axis (|x| <= eps|y|), degree 2 near ``-R``.
    """
    if degree not in (2, 3):
        raise ValueError("degree must be 2 or 3")
    if eps_mode not in ("relative", "absolute"):
        raise ValueError("eps_mode must be 'relative' or 'absolute'")
    if not (R > 0 and eps > 0):
        raise ValueError("need R > 0 and eps > 0")
    y0 = eps * R if eps_mode == "relative" else eps
    if y0 >= R:
        raise ValueError("the imaginary offset must be much smaller than R")
    gate = y0 / R
    config = config or IntegratorConfig(initial_step=1e-3 / R ** (degree - 1), max_step=1.0)
    problem = (OdeProblem.complex_quadratic if degree == 2 else OdeProblem.complex_cubic)(R, y0)
    seg = integrate_until(problem, config, _arrival_event(degree, R, gate))
    if seg.termination != "predicate_hit":
        raise TransitionTimeout(f"no arrival ({seg.termination}) after {len(seg.t) - 1} steps")
    return seg.last_t
