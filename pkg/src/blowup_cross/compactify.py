"""Circle and sphere compactifications that put infinity on an orbit like any other point.

All maps are vectorised. On the exact orbits they were built from the
outputs have unit norm; off-orbit inputs give a raw point whose norm
residual is exposed (``normalize=True`` projects it back to the unit circle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PoleError(ZeroDivisionError):
    """The compactifying denominator vanished; perturb t."""


@dataclass(frozen=True)
class CirclePoint:
    X: np.ndarray
    Y: np.ndarray

    @property
    def residual(self):
        return self.X ** 2 + self.Y ** 2 - 1.0

    @property
    def angle(self):
        return np.arctan2(self.Y, self.X)


@dataclass(frozen=True)
class SpherePoint:
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    @property
    def residual(self):
        return self.X ** 2 + self.Y ** 2 + self.Z ** 2 - 1.0


def _circle(s, x, normalize):
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    den = s + x
    if np.any(den == 0):
        raise PoleError("s + x = 0: point sits on the compactification pole")
    X = (s - x) / den
    Y = 2.0 / den
    if normalize:
        nrm = np.hypot(X, Y)
        X, Y = X / nrm, Y / nrm
    return CirclePoint(X, Y)


def time_to_go_power(t, t_star, a):
    """``(t* - t)**a``; only defined past t* when ``a`` is an integer."""
    d = t_star - np.asarray(t, dtype=float)
    if float(a).is_integer():
        return d ** int(a)
    if np.any(d < 0):
        raise ValueError("(t* - t)**a is not real past t* for non-integer a")
    return d ** a


def circle_power(t, x, t_star, a=1.0, normalize=False) -> CirclePoint:
    """X = (T - x)/(T + x), Y = 2/(T + x) with T = (t* - t)**a.

    Exact on ``x = (t* - t)**(-a)``. Pass ``x**2`` with ``a = 1`` for the
    cubic-law form.
    """
    return _circle(time_to_go_power(t, t_star, a), x, normalize)


def circle_from_inverse(t, y, t_star, normalize=False) -> CirclePoint:
    """:func:`circle_power` with ``a = 1`` evaluated from the inverse variable ``y = 1/x``.

    Finite at ``y = 0``, so good-chart samples at the crossing map to (-1, 0).
    """
    T = t_star - np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    den = T * y + 1.0
    if np.any(den == 0):
        raise PoleError("T*y + 1 = 0")
    X = (T * y - 1.0) / den
    Y = 2.0 * y / den
    if normalize:
        nrm = np.hypot(X, Y)
        X, Y = X / nrm, Y / nrm
    return CirclePoint(X, Y)


def circle_exponential(t, x, t_star, sign=1.0, normalize=False) -> CirclePoint:
    """Circle for ``dx/dt = sign * x``; on the orbit X = tanh(-sign (t - t*)), Y = sech(t - t*)."""
    s = np.exp(sign * (t_star - np.asarray(t, dtype=float)))
    return _circle(s, x, normalize)


def circle_asymptotic(t, x, t_star, normalize=False) -> CirclePoint:
    """Circle for ``dx/dt = 2x + x**2`` with ``t* - t`` replaced by ``(exp(2(t* - t)) - 1)/2``."""
    s = 0.5 * np.expm1(2.0 * (t_star - np.asarray(t, dtype=float)))
    return _circle(s, x, normalize)


def riemann_sphere(x, y) -> SpherePoint:
    """Inverse stereographic projection of ``x + iy``; infinity goes to (0, 0, 1)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # scale by the larger of 1 and |z| so huge inputs do not overflow x**2
    m = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1.0)
    xs, ys, inv = x / m, y / m, 1.0 / m
    r2 = xs * xs + ys * ys
    den = r2 + inv * inv
    return SpherePoint(2.0 * xs * inv / den, 2.0 * ys * inv / den, (r2 - inv * inv) / den)


def pde_sphere(u, t, t_star, r_exp, f) -> SpherePoint:
    """Sphere point for a self-similar field ``u = f / (t* - t)**r_exp`` with ``0 <= f <= 1``.

    X = g (T - u)/(T + u), Y = 2 g sqrt(f)/(T + u), Z = f with g = sqrt(1 - f**2).
    """
    f = np.asarray(f, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(f) > 1.0):
        raise ValueError("profile must be normalised to |f| <= 1")
    if np.any(f < 0):
        raise ValueError("profile must be non-negative for the sqrt(f) branch")
    T = time_to_go_power(t, t_star, r_exp)
    den = T + u
    if np.any(den == 0):
        raise PoleError("T + u = 0")
    g = np.sqrt(1.0 - f * f)
    return SpherePoint(g * (T - u) / den, g * 2.0 * np.sqrt(f) / den, f)
