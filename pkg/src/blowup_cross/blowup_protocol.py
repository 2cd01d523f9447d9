"""Detect self-similar blowup, switch to the transformed equation, cross, switch back.

The run is split into three segments: the original ("bad") chart until
``|x|`` reaches the switch level, the transformed ("good") chart until the
good variable has passed through zero and reached ``return_level`` on the
other side, then the original chart again up to ``t_end``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ode_engine import (
    IntegratorConfig,
    OdeProblem,
    TrajectorySegment,
    integrate_until,
    magnitude_reached,
    time_reached,
)

SNAP_TOL = 0.02
DEFAULT_WINDOW = 8
DEFAULT_R2 = 0.999
BRANCHES = ("real_continuation", "imaginary_plus", "imaginary_minus")


class ProtocolError(RuntimeError):
    """The crossing protocol could not be carried out; ``diagnostic`` says why."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True)
class PowerLawFit:
    p_hat: float
    c_hat: float
    r_squared: float
    window: int
    accepted: bool


@dataclass(frozen=True)
class ChartState:
    """Coordinate chart: ``original``, ``inverse_power`` (y = x**q) or ``inverse_affine`` (y = 1/x)."""

    chart: str = "original"
    q: float = 1.0

    def forward(self, x):
        if self.chart == "original":
            return x
        if self.chart == "inverse_affine":
            return 1.0 / x
        q = self.q
        if float(q).is_integer() and int(q) % 2 == 0:
            return abs(x) ** q
        return math.copysign(abs(x) ** q, x)

    def back(self, y, sign=1.0):
        """Inverse map. Returns a real float, or a complex number for an even ``q`` and ``y < 0``.

        ``sign`` restores the sign lost by ``|x|**q`` when ``q`` is even; for
        ``y < 0`` it selects the ``+i`` (sign > 0) or ``-i`` branch.
        """
        if self.chart == "original":
            return y
        if self.chart == "inverse_affine":
            return 1.0 / y
        q = self.q
        mag = abs(y) ** (1.0 / q)
        if float(q).is_integer() and int(q) % 2 == 0:
            if y >= 0:
                return math.copysign(mag, sign)
            return complex(0.0, math.copysign(mag, sign))
        return math.copysign(mag, y)


@dataclass(frozen=True)
class CrossingRecord:
    t_star_estimate: float
    switch_in: tuple
    switch_out: tuple
    branch: str
    p_hat: float = float("nan")
    t_zero: float = float("nan")


@dataclass
class ChartedTrajectory:
    segments: list = field(default_factory=list)

    @property
    def t(self):
        return np.concatenate([s.t for s in self.segments])

    def charts(self):
        return np.concatenate([np.full(len(s.t), s.chart, dtype=object) for s in self.segments])

    def x_values(self, chart_state: ChartState | None = None, sign: float = 1.0):
        """Trajectory in the original variable as complex numbers.

        Good-chart samples are mapped back with ``chart_state``; samples at
        ``y == 0`` (the crossing itself) come out as ``inf``.
        """
        out = []
        for seg in self.segments:
            vals = seg.states[:, 0]
            if seg.chart == "original":
                if seg.branch == "real_continuation":
                    out.append(vals.astype(complex))
                else:
                    out.append(1j * vals)
            else:
                cs = chart_state or seg.meta["chart_state"]
                with np.errstate(divide="ignore"):
                    out.append(np.array([complex(cs.back(v, sign)) if v != 0 else complex(np.inf)
                                         for v in vals]))
        return np.concatenate(out)


def detect_power_law(recent, min_window: int = DEFAULT_WINDOW,
                     r2_threshold: float = DEFAULT_R2) -> PowerLawFit:
    """Least-squares fit of ``log|F| = log c + p log|x|`` over the samples.

    ``recent`` is a sequence of ``(x, F(x))`` pairs.
    """
    arr = np.asarray(recent, dtype=float).reshape(-1, 2)
    x, f = arr[:, 0], arr[:, 1]
    if np.any(x == 0) or np.any(f == 0):
        raise ValueError("power-law detection needs nonzero x and F(x)")
    n = len(x)
    if n < 2:
        return PowerLawFit(float("nan"), float("nan"), 0.0, n, False)
    lx, lf = np.log(np.abs(x)), np.log(np.abs(f))
    (p, logc), ss_res, *_ = np.polyfit(lx, lf, 1, full=True)
    ss_res = float(ss_res[0]) if len(ss_res) else 0.0
    ss_tot = float(np.sum((lf - lf.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    r2 = min(max(r2, 0.0), 1.0)
    accepted = bool(n >= min_window and r2 >= r2_threshold)
    return PowerLawFit(float(p), float(math.copysign(math.exp(logc), f[-1])), r2, n, accepted)


def fit_window(x: np.ndarray, min_window: int = DEFAULT_WINDOW, decades: float = 1.0):
    """Indices of the shortest trailing window with >= min_window samples spanning ``decades``."""
    ax = np.abs(np.asarray(x, dtype=float))
    n = len(ax)
    start = max(n - min_window, 0)
    while start > 0 and ax[start:].max() < 10 ** decades * ax[start:].min():
        start -= 1
    return slice(start, n)


def snap_exponent(p_hat: float) -> float:
    nearest = round(p_hat)
    return float(nearest) if abs(p_hat - nearest) <= SNAP_TOL else float(p_hat)


def default_switch_level(p: float) -> float:
    if p == 2:
        return 100.0
    if p == 3:
        return 25.0
    return 100.0


def good_equation_for(problem: OdeProblem, fit: PowerLawFit, y0: float = 0.0, t0: float = 0.0):
    """The transformed equation and its chart.

    Power laws ``dx/dt = s x**p`` go to ``y = x**(1-p)`` with constant rate
    ``-s (p-1)``; the asymptotic quadratic goes to ``y = 1/x`` with
    ``dy/dt = -2y - 1``.
    """
    if not fit.accepted:
        raise ValueError("power-law fit not accepted; refusing to switch charts")
    p = snap_exponent(fit.p_hat)
    if p <= 1:
        raise ValueError(f"exponent {p} <= 1 does not blow up")
    if problem.kind == "asymptotic_quadratic":
        return OdeProblem.good_affine(-2.0, -1.0, y0, t0), ChartState("inverse_affine")
    sign = problem.sign if problem.kind == "power" else math.copysign(1.0, fit.c_hat)
    return OdeProblem.good_constant(-sign * (p - 1.0), y0, t0), ChartState("inverse_power", 1.0 - p)


def _zero_time(good: OdeProblem, y_s: float, t_s: float) -> float:
    if good.kind == "good_constant":
        return t_s + abs(y_s) / abs(good.c)
    a, b = good.alpha, good.beta
    return t_s + math.log(b / (a * y_s + b)) / a


def _resume_problem(problem, chart, p, branch, y_out, t_out, sign_in):
    x_back = chart.back(y_out, 1.0 if branch != "imaginary_minus" else -1.0)
    if problem.kind == "asymptotic_quadratic":
        return problem.with_initial([x_back], t_out), "real_continuation", x_back
    if isinstance(x_back, complex):
        # x = i s on the imaginary axis obeys ds/dt = sign * i**(p-1) * s**p
        s = x_back.imag
        rot = (-1.0) ** ((round(p) - 1) // 2)
        return OdeProblem.power(problem.p, s, sign=problem.sign * rot, t0=t_out), branch, x_back
    if chart.q % 2 == 0:
        x_back = math.copysign(abs(x_back), sign_in)
    return problem.with_initial([x_back], t_out), "real_continuation", x_back


def cross_infinity(problem: OdeProblem, config: IntegratorConfig | None = None,
                   switch_level: float | None = None, return_level: float = 0.01,
                   branch_policy: str | None = None, t_end: float | None = None,
                   min_window: int = DEFAULT_WINDOW, r2_threshold: float = DEFAULT_R2,
                   max_level_doublings: int = 40):
    """Run the detect / switch / cross / switch-back protocol.

    Returns ``(ChartedTrajectory, CrossingRecord)``. ``t_end`` defaults to
    ``2 t* - t0`` so the continuation is as long as the approach.
    """
    config = config or IntegratorConfig()
    if problem.kind not in ("power", "asymptotic_quadratic"):
        raise ValueError(f"no crossing protocol for {problem.kind}")
    nominal_p = problem.p if problem.kind == "power" else 2.0
    level = switch_level if switch_level is not None else default_switch_level(nominal_p)
    if not return_level > 0:
        raise ValueError("return_level must be positive")
    odd = problem.kind == "power" and float(nominal_p).is_integer() and int(nominal_p) % 2 == 1
    if branch_policy is None:
        branch_policy = "imaginary_plus" if odd else "real_continuation"
    if branch_policy not in BRANCHES:
        raise ValueError(f"unknown branch policy {branch_policy!r}")
    if odd and branch_policy == "real_continuation":
        raise ValueError("odd exponents have no real continuation; choose an imaginary branch")

    # 1. bad chart, monitoring the growth law at each level reached
    seg = integrate_until(problem, config, magnitude_reached(level))
    segments = [seg]
    for _ in range(max_level_doublings):
        if seg.termination != "predicate_hit":
            raise ProtocolError("integration failed before the switch level",
                                {"termination": seg.termination, "t": seg.last_t,
                                 "x": float(seg.last_state[0])})
        t_all = np.concatenate([s.t for s in segments])
        x_all = np.concatenate([s.states[:, 0] for s in segments])
        win = fit_window(x_all, min_window)
        xs = x_all[win]
        fit = detect_power_law(np.column_stack([xs, problem.scalar_rate(xs)]), min_window, r2_threshold)
        if fit.accepted:
            break
        level *= 2.0
        seg = integrate_until(problem.with_initial(seg.last_state, seg.last_t), config,
                              magnitude_reached(level))
        segments.append(TrajectorySegment("original", seg.t[1:], seg.states[1:], seg.termination))
    else:
        raise ProtocolError("no self-similar growth detected", {"p_hat": fit.p_hat, "r2": fit.r_squared})
    bad = TrajectorySegment("original", t_all, np.concatenate([s.states for s in segments]),
                            "predicate_hit")

    # 2. good chart through zero
    t_s, x_s = bad.last_t, float(bad.last_state[0])
    good0, chart = good_equation_for(problem, fit)
    y_s = chart.forward(x_s)
    good = good0.with_initial([y_s], t_s)
    side = math.copysign(1.0, y_s)
    to_zero = integrate_until(good, config, lambda t, s: -side * s[0], chart="good")
    if to_zero.termination != "predicate_hit":
        raise ProtocolError("good equation did not reach zero", {"termination": to_zero.termination})
    t_zero = to_zero.last_t
    crossed = lambda t, s: (-side * s[0] - return_level) / return_level
    beyond = integrate_until(good.with_initial(to_zero.last_state, t_zero), config, crossed,
                             chart="good")
    if beyond.termination != "predicate_hit":
        raise ProtocolError("good equation did not cross zero", {"termination": beyond.termination})
    gseg = TrajectorySegment("good", np.concatenate([to_zero.t, beyond.t[1:]]),
                             np.concatenate([to_zero.states, beyond.states[1:]]), "predicate_hit",
                             event_residual=beyond.event_residual, meta={"chart_state": chart})
    t_star = _zero_time(good, y_s, t_s)

    # 3. back to the original equation on the selected branch
    t_out, y_out = gseg.last_t, float(gseg.last_state[0])
    p_used = snap_exponent(fit.p_hat) if problem.kind == "power" else 2.0
    resumed, branch, x_out = _resume_problem(problem, chart, p_used, branch_policy, y_out, t_out,
                                             math.copysign(1.0, x_s))
    if t_end is None:
        t_end = 2.0 * t_star - problem.initial_time
    tail = integrate_until(resumed, config, time_reached(t_end))
    if tail.termination != "predicate_hit":
        raise ProtocolError("continuation past infinity failed", {"termination": tail.termination})
    tail.branch = branch

    record = CrossingRecord(t_star_estimate=t_star, switch_in=(t_s, x_s), switch_out=(t_out, x_out),
                            branch=branch, p_hat=fit.p_hat, t_zero=t_zero)
    return ChartedTrajectory([bad, gseg, tail]), record
