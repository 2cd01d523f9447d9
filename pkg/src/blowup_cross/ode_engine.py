"""Adaptive Dormand-Prince 5(4) integration with terminal events.

The right-hand sides are a small catalog (:class:`OdeProblem`) of scalar
blowup models, their transformed "good" counterparts and the complexified
quadratic and cubic flows written as planar systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

EPS = np.finfo(float).eps

KINDS = {
    "power": 1,
    "asymptotic_quadratic": 1,
    "linear": 1,
    "complex_quadratic": 2,
    "complex_cubic": 2,
    "good_affine": 1,
    "good_constant": 1,
}


@dataclass(frozen=True)
class OdeProblem:
    """A catalog right-hand side plus initial data.

    ``p``/``sign`` parametrise ``power`` (dx/dt = sign * x**p) and ``linear``
    (dx/dt = sign * x); ``alpha``/``beta`` parametrise ``good_affine``
    (dy/dt = alpha*y + beta); ``c`` is the rate of ``good_constant``.
    """

    kind: str
    initial_state: np.ndarray
    initial_time: float = 0.0
    p: float = 2.0
    sign: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rhs kind {self.kind!r}")
        state = np.atleast_1d(np.asarray(self.initial_state, dtype=float)).copy()
        if state.shape != (KINDS[self.kind],):
            raise ValueError(f"{self.kind} needs a state of dimension {KINDS[self.kind]}, got {state.shape}")
        if self.sign not in (1.0, -1.0, 1, -1):
            raise ValueError("sign must be +1 or -1")
        state.setflags(write=False)
        object.__setattr__(self, "initial_state", state)
        object.__setattr__(self, "initial_time", float(self.initial_time))

    @property
    def dimension(self) -> int:
        return KINDS[self.kind]

    # convenience constructors
    @classmethod
    def power(cls, p, x0, sign=1.0, t0=0.0):
        return cls("power", [x0], t0, p=float(p), sign=float(sign))

    @classmethod
    def asymptotic_quadratic(cls, x0, t0=0.0):
        return cls("asymptotic_quadratic", [x0], t0)

    @classmethod
    def linear(cls, x0, sign=1.0, t0=0.0):
        return cls("linear", [x0], t0, sign=float(sign))

    @classmethod
    def complex_quadratic(cls, x0, y0, t0=0.0):
        return cls("complex_quadratic", [x0, y0], t0)

    @classmethod
    def complex_cubic(cls, x0, y0, t0=0.0):
        return cls("complex_cubic", [x0, y0], t0)

    @classmethod
    def good_affine(cls, alpha, beta, y0, t0=0.0):
        return cls("good_affine", [y0], t0, alpha=float(alpha), beta=float(beta))

    @classmethod
    def good_constant(cls, c, y0, t0=0.0):
        return cls("good_constant", [y0], t0, c=float(c))

    def with_initial(self, state, t0) -> "OdeProblem":
        return OdeProblem(self.kind, state, t0, p=self.p, sign=self.sign, alpha=self.alpha,
                          beta=self.beta, c=self.c)

    def scalar_rate(self, x):
        """F(x) for the scalar models, vectorised over ``x``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            if float(self.p).is_integer():
                return self.sign * x ** int(self.p)
            return self.sign * np.sign(x) * np.abs(x) ** self.p
        if self.kind == "asymptotic_quadratic":
            return 2.0 * x + x * x
        if self.kind == "linear":
            return self.sign * x
        if self.kind == "good_affine":
            return self.alpha * x + self.beta
        if self.kind == "good_constant":
            return np.full_like(x, self.c)
        raise ValueError(f"{self.kind} is not a scalar model")


def rhs_eval(problem: OdeProblem, t: float, state) -> np.ndarray:
    """Derivative of ``state`` at time ``t`` (autonomous, so ``t`` is unused)."""
    s = np.asarray(state, dtype=float)
    if s.shape != (problem.dimension,):
        raise ValueError(f"state of shape {s.shape} does not match {problem.kind}")
    kind = problem.kind
    if kind == "complex_quadratic":
        x, y = s
        return np.array([x * x - y * y, 2.0 * x * y])
    if kind == "complex_cubic":
        x, y = s
        return np.array([x ** 3 - 3.0 * x * y * y, 3.0 * x * x * y - y ** 3])
    x = s[0]
    if kind == "power":
        p = problem.p
        if float(p).is_integer():
            val = x ** int(p)
        else:
            val = math.copysign(abs(x) ** p, x)
        return np.array([problem.sign * val])
    if kind == "asymptotic_quadratic":
        return np.array([2.0 * x + x * x])
    if kind == "linear":
        return np.array([problem.sign * x])
    if kind == "good_affine":
        return np.array([problem.alpha * x + problem.beta])
    return np.array([problem.c])


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    initial_step: float = 1e-4
    max_step: float = 0.1
    max_steps: int = 200_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "initial_step", "max_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class TrajectorySegment:
    """Accepted samples of one integration run in one chart."""

    chart: str
    t: np.ndarray
    states: np.ndarray
    termination: str
    branch: str = "real_continuation"
    event_residual: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def last_t(self) -> float:
        return float(self.t[-1])

    @property
    def last_state(self) -> np.ndarray:
        return self.states[-1].copy()


# Events are callables g(t, state) -> float; the run stops once g >= 0.
# Residuals are dimensionless so a single abs_tol can localise them.
Event = Callable[[float, np.ndarray], float]


def time_reached(t_end: float) -> Event:
    scale = max(1.0, abs(t_end))
    return lambda t, s: (t - t_end) / scale


def magnitude_reached(level: float, index: int = 0) -> Event:
    """|state[index]| >= level."""
    return lambda t, s: (abs(s[index]) - level) / level


def norm_reached(level: float) -> Event:
    return lambda t, s: (math.hypot(*s) - level) / level


def value_below(level: float, index: int = 0) -> Event:
    scale = max(1.0, abs(level))
    return lambda t, s: (level - s[index]) / scale


def any_of(*events: Event) -> Event:
    return lambda t, s: max(g(t, s) for g in events)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _dp_step(f, t, y, k0, h):
    k = [k0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(f(t + _C[i] * h, yi))
    y_new = y + h * sum(b * kj for b, kj in zip(_B, k) if b != 0.0)
    err = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    return y_new, err, k[6]


def integrate_until(problem: OdeProblem, config: IntegratorConfig, stop: Event | None = None,
                    chart: str = "original") -> TrajectorySegment:
    """Integrate ``problem`` until ``stop`` fires, steps run out, or steps underflow.

    The event is bracketed by the last accepted step and then bisected by
    re-taking a single Dormand-Prince step of fractional length from the
    start of that step. The returned final sample is on the ``g >= 0`` side
    with ``|g| <= abs_tol`` unless the bracket collapses to rounding first.
    """
    rhs_f = lambda t, y: rhs_eval(problem, t, y)
    t = problem.initial_time
    y = problem.initial_state.astype(float).copy()
    ts, ys = [t], [y.copy()]
    if stop is not None:
        g0 = stop(t, y)
        if g0 >= 0:
            return TrajectorySegment(chart, np.array(ts), np.array(ys), "predicate_hit",
                                     event_residual=float(g0))
    k0 = rhs_f(t, y)
    h = min(config.initial_step, config.max_step)
    err_prev = 1e-4
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while steps < config.max_steps:
            y_new, err_vec, k_last = _dp_step(rhs_f, t, y, k0, h)
            scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
            if not math.isfinite(err) or not np.all(np.isfinite(y_new)):
                err = float("inf")
            if err <= 1.0:
                steps += 1
                t_new = t + h
                if stop is not None:
                    g_new = stop(t_new, y_new)
                    if g_new >= 0:
                        t_ev, y_ev, g_ev = _locate_event(rhs_f, stop, t, y, k0, h, y_new, g_new,
                                                         config.abs_tol)
                        ts.append(t_ev)
                        ys.append(y_ev)
                        return TrajectorySegment(chart, np.array(ts), np.array(ys), "predicate_hit",
                                                 event_residual=float(g_ev))
                t, y, k0 = t_new, y_new, k_last
                ts.append(t)
                ys.append(y.copy())
                fac = 0.9 * max(err, 1e-10) ** -0.17 * err_prev ** 0.04
                err_prev = max(err, 1e-4)
                h = min(h * min(10.0, max(0.2, fac)), config.max_step)
            else:
                fac = 0.9 * err ** -0.2 if math.isfinite(err) else 0.1
                h = h * max(0.1, min(0.9, fac))
                if h < 1e3 * EPS * max(abs(t), 1.0):
                    return TrajectorySegment(chart, np.array(ts), np.array(ys), "step_underflow")
    return TrajectorySegment(chart, np.array(ts), np.array(ys), "max_steps")


def _locate_event(f, g, t0, y0, k0, h, y1, g1, tol):
    lo, hi = 0.0, 1.0
    y_hi, g_hi = y1, g1
    for _ in range(200):
        if abs(g_hi) <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) * h <= 2 * EPS * max(abs(t0), 1.0):
            break
        y_mid = _dp_step(f, t0, y0, k0, mid * h)[0]
        g_mid = g(t0 + mid * h, y_mid)
        if g_mid >= 0:
            hi, y_hi, g_hi = mid, y_mid, g_mid
        else:
            lo = mid
    return t0 + hi * h, y_hi, g_hi
