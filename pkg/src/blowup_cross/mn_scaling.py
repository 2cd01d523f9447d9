"""Self-similar scaling: exponent prediction, empirical power-law fits and parabola fixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar


@dataclass(frozen=True)
class ScalingSignature:
    """``a``: scaling power of the spatial operator, ``s``: power of the nonlinearity."""

    a: float
    s: float

    def __post_init__(self):
        if self.s == 1:
            raise ValueError("s = 1 gives exponential growth, not a power law")
        if self.a == 0:
            raise ValueError("a must be nonzero")


@dataclass(frozen=True)
class BlowupScaling:
    amplitude_exponent: float
    width_exponent: float


@dataclass(frozen=True)
class ScalingFitResult:
    t_star_hat: float
    exponent_hat: float
    residual: float

    @property
    def accepted(self) -> bool:
        return math.isfinite(self.residual)


REJECTED = ScalingFitResult(float("nan"), float("nan"), float("inf"))


def predict_exponents(sig: ScalingSignature) -> BlowupScaling:
    """Amplitude ~ (t* - t)**(1/(1 - s)), width ~ (t* - t)**(1/a)."""
    return BlowupScaling(1.0 / (1.0 - sig.s), 1.0 / sig.a)


def _loglog_fit(t, amp, t_star):
    X = np.log(t_star - t)
    Y = np.log(amp)
    slope, icpt = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + icpt)
    return float(slope), float(np.sqrt(np.mean(resid ** 2)))


def fit_blowup_scaling(t, amplitude, rms_threshold: float = 1e-2, tail: int = 4) -> ScalingFitResult:
    """Fit ``A ~ (t* - t)**k`` with t* chosen to minimise the log-log RMS residual.

    t* is searched by bounded Brent minimisation on ``(t_end, t_end + 10 (t_end - t_start))``.
    The result is rejected (``residual = inf``) when the last ``tail``
    amplitudes are not strictly increasing, or when the best RMS residual
    exceeds ``rms_threshold`` or the optimum sits on the far end of the bracket
    (no finite-time singularity in sight).
    """
    t = np.asarray(t, dtype=float)
    amp = np.asarray(amplitude, dtype=float)
    if t.shape != amp.shape or t.size < 4:
        raise ValueError("need matching t and amplitude arrays with at least 4 samples")
    if np.any(amp <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("amplitudes must be positive and times increasing")
    if np.any(np.diff(amp[-tail:]) <= 0):
        return REJECTED
    t0, t1 = t[0], t[-1]
    span = t1 - t0
    lo_b = t1 + 1e-12 * max(1.0, abs(t1))
    hi_b = t1 + 10.0 * span
    # search in log(t* - t_end) so the near-singular end is resolved
    res = minimize_scalar(lambda q: _loglog_fit(t, amp, t1 + math.exp(q))[1],
                          bounds=(math.log(lo_b - t1), math.log(hi_b - t1)), method="bounded",
                          options={"xatol": 1e-10})
    t_star = t1 + math.exp(res.x)
    slope, rms = _loglog_fit(t, amp, t_star)
    if rms > rms_threshold or hi_b - t_star < 1e-3 * span:
        return ScalingFitResult(float(t_star), float(slope), float("inf"))
    return ScalingFitResult(float(t_star), float(slope), rms)


def fit_power_law_given_t_star(t, values, t_star):
    """Slope and RMS of log(values) against log(t* - t) for a known t*."""
    return _loglog_fit(np.asarray(t, dtype=float), np.asarray(values, dtype=float), t_star)


def half_max_width(x, amplitude):
    """Full width of ``amplitude`` at half its maximum around the peak, with linear interpolation.

    Expects a single peak; the crossing points are searched outward from it.
    Returns ``nan`` when either side never drops below half the maximum.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(amplitude, dtype=float)
    k = int(np.argmax(a))
    half = 0.5 * a[k]

    def side(step):
        i = k
        while 0 <= i + step < a.size:
            j = i + step
            if a[j] <= half:
                return x[i] + (half - a[i]) * (x[j] - x[i]) / (a[j] - a[i])
            i = j
        return float("nan")

    return side(1) - side(-1)


@dataclass(frozen=True)
class ParabolaSnapshot:
    v: np.ndarray
    w: np.ndarray
    poles: np.ndarray
    crossings: tuple


def parabola_fixture(t: float, grid) -> ParabolaSnapshot:
    """``v = x**2 + 0.1 - 0.1 t`` and ``w = 1/v``; nodes with ``v = 0`` are poles (w = nan)."""
    x = np.asarray(grid, dtype=float)
    v = x * x + 0.1 - 0.1 * t
    poles = v == 0
    w = np.full_like(v, np.nan)
    w[~poles] = 1.0 / v[~poles]
    if t < 1:
        crossings = ()
    elif t == 1:
        crossings = (0.0,)
    else:
        c = math.sqrt(0.1 * (t - 1.0))
        crossings = (-c, c)
    return ParabolaSnapshot(v, w, poles, crossings)


@dataclass(frozen=True)
class LocalParabola:
    """Near-tip model ``v = f0 (t* - t)**(2b) + (f2/2)(x - x0)**2``."""

    a_exp: float
    b_exp: float
    f0: float
    f2: float
    x0: float
    t_star: float = 0.0

    def v(self, x, t):
        d = self.t_star - np.asarray(t, dtype=float)
        return self.f0 * np.sign(d) * np.abs(d) ** (2 * self.b_exp) + 0.5 * self.f2 * (np.asarray(x) - self.x0) ** 2

    def w(self, x, t):
        return 1.0 / self.v(x, t)


def local_parabola_expansion(a_exp, b_exp, f0, f2, x0, t_star=0.0) -> LocalParabola:
    """Coefficient record of the quadratic near-tip model around an extremum at ``x0``.

    Past t* the constant term changes sign, so the model crosses zero at two points.
    """
    return LocalParabola(float(a_exp), float(b_exp), float(f0), float(f2), float(x0), float(t_star))
