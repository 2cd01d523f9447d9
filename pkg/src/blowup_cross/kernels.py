"""Finite-difference kernels for the w/v reaction-diffusion charts.

Every kernel exists as a numba loop (``_nb_*``) and a vectorised numpy/scipy
twin (``_np_*``). The public names are bound to one family at import time,
see :mod:`blowup_cross._accel`. Both families accept real or complex arrays.

Boundary codes: ``NEUMANN`` mirrors a ghost node (second order), ``DIRICHLET``
freezes the end value, which the caller stores in the input array.
"""

import numpy as np
from scipy.linalg import solve_banded

from ._accel import USE_NUMBA, njit

NEUMANN = 0
DIRICHLET = 1


class NewtonFailure(RuntimeError):
    """Damped Newton did not reach its residual tolerance."""


# ---------------------------------------------------------------- numba family


@njit
def _nb_solve_tridiagonal(lower, diag, upper, rhs):
    n = diag.shape[0]
    cp = np.empty_like(rhs)
    dp = np.empty_like(rhs)
    x = np.empty_like(rhs)
    beta = diag[0]
    cp[0] = upper[0] / beta
    dp[0] = rhs[0] / beta
    for i in range(1, n):
        beta = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / beta
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / beta
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


@njit
def _nb_neighbours(u, i, left, right):
    n = u.shape[0]
    if i == 0:
        ul = u[1]
    else:
        ul = u[i - 1]
    if i == n - 1:
        ur = u[n - 2]
    else:
        ur = u[i + 1]
    return ul, ur


@njit
def _nb_bad_rhs(w, h, r, left, right):
    n = w.shape[0]
    out = np.zeros_like(w)
    inv_h2 = 1.0 / (h * h)
    for i in range(n):
        if (i == 0 and left == 1) or (i == n - 1 and right == 1):
            continue
        wl, wr = _nb_neighbours(w, i, left, right)
        wc = w[i]
        wx = (wr - wl) / (2.0 * h)
        out[i] = (wl - 2.0 * wc + wr) * inv_h2 - 2.0 * wx * wx / wc + wc + r * wc * wc
    return out


@njit
def _nb_good_rhs(v, h, r, left, right):
    n = v.shape[0]
    out = np.zeros_like(v)
    inv_h2 = 1.0 / (h * h)
    for i in range(n):
        if (i == 0 and left == 1) or (i == n - 1 and right == 1):
            continue
        vl, vr = _nb_neighbours(v, i, left, right)
        out[i] = (vl - 2.0 * v[i] + vr) * inv_h2 - v[i] - r
    return out


@njit
def _nb_bad_system(w, w_old, dt, h, r, left, right):
    n = w.shape[0]
    res = np.zeros_like(w)
    lo = np.zeros_like(w)
    di = np.ones_like(w)
    up = np.zeros_like(w)
    inv_h2 = 1.0 / (h * h)
    for i in range(n):
        if (i == 0 and left == 1) or (i == n - 1 and right == 1):
            continue
        wl, wr = _nb_neighbours(w, i, left, right)
        wc = w[i]
        wx = (wr - wl) / (2.0 * h)
        g = (wl - 2.0 * wc + wr) * inv_h2 - 2.0 * wx * wx / wc + wc + r * wc * wc
        res[i] = wc - w_old[i] - dt * g
        dgc = -2.0 * inv_h2 + 2.0 * wx * wx / (wc * wc) + 1.0 + 2.0 * r * wc
        di[i] = 1.0 - dt * dgc
        if i == 0:
            up[i] = -dt * 2.0 * inv_h2
        elif i == n - 1:
            lo[i] = -dt * 2.0 * inv_h2
        else:
            lo[i] = -dt * (inv_h2 + 2.0 * wx / (wc * h))
            up[i] = -dt * (inv_h2 - 2.0 * wx / (wc * h))
    return res, lo, di, up


@njit
def _nb_bad_residual(w, w_old, dt, h, r, left, right):
    return w - w_old - dt * _nb_bad_rhs(w, h, r, left, right)


@njit
def _nb_max_abs(a):
    m = 0.0
    for i in range(a.shape[0]):
        v = abs(a[i])
        if v > m:
            m = v
    return m


@njit
def _nb_implicit_bad_step(w_start, dt, h, r, left, right, tol, max_iter, max_halvings):
    w_old = w_start.copy()
    w = w_start.copy()
    res, lo, di, up = _nb_bad_system(w, w_old, dt, h, r, left, right)
    fnorm = _nb_max_abs(res)
    for it in range(max_iter):
        scale = 1.0 + _nb_max_abs(w)
        if fnorm <= tol * scale:
            return w, it, True
        delta = _nb_solve_tridiagonal(lo, di, up, res)
        lam = 1.0
        trial = w - delta
        tres = _nb_bad_residual(trial, w_old, dt, h, r, left, right)
        tnorm = _nb_max_abs(tres)
        k = 0
        while (not tnorm <= fnorm) and k < max_halvings:
            lam *= 0.5
            trial = w - lam * delta
            tres = _nb_bad_residual(trial, w_old, dt, h, r, left, right)
            tnorm = _nb_max_abs(tres)
            k += 1
        step = lam * _nb_max_abs(delta)
        w = trial
        res, lo, di, up = _nb_bad_system(w, w_old, dt, h, r, left, right)
        fnorm = _nb_max_abs(res)
        if step <= 1e-14 * (1.0 + _nb_max_abs(w)) and fnorm <= 1e3 * tol * (1.0 + _nb_max_abs(w)):
            return w, it + 1, True
    scale = 1.0 + _nb_max_abs(w)
    return w, max_iter, fnorm <= tol * scale


@njit
def _nb_implicit_good_step(v_start, dt, h, r, left, right):
    n = v_start.shape[0]
    lo = np.zeros_like(v_start)
    di = np.ones_like(v_start)
    up = np.zeros_like(v_start)
    rhs = v_start.copy()
    lam = dt / (h * h)
    for i in range(n):
        if (i == 0 and left == 1) or (i == n - 1 and right == 1):
            continue
        di[i] = 1.0 + dt + 2.0 * lam
        rhs[i] = v_start[i] - dt * r
        if i == 0:
            up[i] = -2.0 * lam
        elif i == n - 1:
            lo[i] = -2.0 * lam
        else:
            lo[i] = -lam
            up[i] = -lam
    return _nb_solve_tridiagonal(lo, di, up, rhs)


# ---------------------------------------------------------------- numpy family


def _np_solve_tridiagonal(lower, diag, upper, rhs):
    n = diag.shape[0]
    ab = np.zeros((3, n), dtype=np.result_type(lower, diag, upper, rhs))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _np_neighbours(u):
    ul = np.empty_like(u)
    ur = np.empty_like(u)
    ul[1:] = u[:-1]
    ur[:-1] = u[1:]
    ul[0] = u[1]
    ur[-1] = u[-2]
    return ul, ur


def _np_interior_mask(n, left, right):
    mask = np.ones(n, dtype=bool)
    if left == DIRICHLET:
        mask[0] = False
    if right == DIRICHLET:
        mask[-1] = False
    return mask


def _np_bad_rhs(w, h, r, left, right):
    wl, wr = _np_neighbours(w)
    wx = (wr - wl) / (2.0 * h)
    g = (wl - 2.0 * w + wr) / (h * h) - 2.0 * wx * wx / w + w + r * w * w
    g[~_np_interior_mask(w.shape[0], left, right)] = 0.0
    return g


def _np_good_rhs(v, h, r, left, right):
    vl, vr = _np_neighbours(v)
    g = (vl - 2.0 * v + vr) / (h * h) - v - r
    g[~_np_interior_mask(v.shape[0], left, right)] = 0.0
    return g


def _np_bad_system(w, w_old, dt, h, r, left, right):
    n = w.shape[0]
    inv_h2 = 1.0 / (h * h)
    wl, wr = _np_neighbours(w)
    wx = (wr - wl) / (2.0 * h)
    g = (wl - 2.0 * w + wr) * inv_h2 - 2.0 * wx * wx / w + w + r * w * w
    res = w - w_old - dt * g
    di = 1.0 - dt * (-2.0 * inv_h2 + 2.0 * wx * wx / (w * w) + 1.0 + 2.0 * r * w)
    lo = -dt * (inv_h2 + 2.0 * wx / (w * h))
    up = -dt * (inv_h2 - 2.0 * wx / (w * h))
    lo[0] = 0.0
    up[0] = -dt * 2.0 * inv_h2
    up[-1] = 0.0
    lo[-1] = -dt * 2.0 * inv_h2
    frozen = ~_np_interior_mask(n, left, right)
    res[frozen] = 0.0
    lo[frozen] = 0.0
    up[frozen] = 0.0
    di[frozen] = 1.0
    return res, lo, di, up


def _np_bad_residual(w, w_old, dt, h, r, left, right):
    return w - w_old - dt * _np_bad_rhs(w, h, r, left, right)


def _np_max_abs(a):
    return float(np.max(np.abs(a))) if a.size else 0.0


def _np_implicit_bad_step(w_start, dt, h, r, left, right, tol, max_iter, max_halvings):
    w_old = w_start.copy()
    w = w_start.copy()
    res, lo, di, up = _np_bad_system(w, w_old, dt, h, r, left, right)
    fnorm = _np_max_abs(res)
    for it in range(max_iter):
        if fnorm <= tol * (1.0 + _np_max_abs(w)):
            return w, it, True
        delta = _np_solve_tridiagonal(lo, di, up, res)
        lam = 1.0
        trial = w - delta
        tnorm = _np_max_abs(_np_bad_residual(trial, w_old, dt, h, r, left, right))
        k = 0
        while (not tnorm <= fnorm) and k < max_halvings:
            lam *= 0.5
            trial = w - lam * delta
            tnorm = _np_max_abs(_np_bad_residual(trial, w_old, dt, h, r, left, right))
            k += 1
        step = lam * _np_max_abs(delta)
        w = trial
        res, lo, di, up = _np_bad_system(w, w_old, dt, h, r, left, right)
        fnorm = _np_max_abs(res)
        scale = 1.0 + _np_max_abs(w)
        if step <= 1e-14 * scale and fnorm <= 1e3 * tol * scale:
            return w, it + 1, True
    return w, max_iter, fnorm <= tol * (1.0 + _np_max_abs(w))


def _np_implicit_good_step(v_start, dt, h, r, left, right):
    n = v_start.shape[0]
    lam = dt / (h * h)
    lo = np.full(n, -lam, dtype=v_start.dtype)
    up = np.full(n, -lam, dtype=v_start.dtype)
    di = np.full(n, 1.0 + dt + 2.0 * lam, dtype=v_start.dtype)
    rhs = v_start - dt * r
    lo[0] = 0.0
    up[0] = -2.0 * lam
    up[-1] = 0.0
    lo[-1] = -2.0 * lam
    frozen = ~_np_interior_mask(n, left, right)
    lo[frozen] = 0.0
    up[frozen] = 0.0
    di[frozen] = 1.0
    rhs[frozen] = v_start[frozen]
    return _np_solve_tridiagonal(lo, di, up, rhs)


# ---------------------------------------------------------------- dispatch

NUMBA_KERNELS = {
    "solve_tridiagonal": _nb_solve_tridiagonal,
    "bad_rhs": _nb_bad_rhs,
    "good_rhs": _nb_good_rhs,
    "bad_system": _nb_bad_system,
    "implicit_bad_step": _nb_implicit_bad_step,
    "implicit_good_step": _nb_implicit_good_step,
}
NUMPY_KERNELS = {
    "solve_tridiagonal": _np_solve_tridiagonal,
    "bad_rhs": _np_bad_rhs,
    "good_rhs": _np_good_rhs,
    "bad_system": _np_bad_system,
    "implicit_bad_step": _np_implicit_bad_step,
    "implicit_good_step": _np_implicit_good_step,
}
ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"


def solve_tridiagonal(lower, diag, upper, rhs):
    """Solve a tridiagonal system.

    ``lower[i]`` multiplies ``x[i-1]`` in row ``i`` and ``upper[i]`` multiplies
    ``x[i+1]``; ``lower[0]`` and ``upper[-1]`` are ignored. No pivoting, so the
    matrix should be diagonally dominant (true for every implicit Euler
    system assembled here).
    """
    return ACTIVE["solve_tridiagonal"](lower, diag, upper, rhs)


def bad_rhs(w, h, r, left=NEUMANN, right=NEUMANN):
    """Semi-discrete right-hand side ``w_xx - 2 w_x**2 / w + w + r w**2``."""
    w = np.asarray(w)
    if np.min(np.abs(w)) < 1e-12:
        raise ZeroDivisionError("w-chart field has a node with |w| < 1e-12")
    return ACTIVE["bad_rhs"](w, float(h), float(r), int(left), int(right))


def good_rhs(v, h, r, left=NEUMANN, right=NEUMANN):
    """Semi-discrete right-hand side ``v_xx - v - r``."""
    return ACTIVE["good_rhs"](np.asarray(v), float(h), float(r), int(left), int(right))


def implicit_bad_step(w_start, dt, h, r, left=NEUMANN, right=NEUMANN, tol=1e-10,
                      max_iter=50, max_halvings=8):
    """One backward Euler step of the w-chart equation by damped Newton.

    ``w_start`` holds the previous values at free nodes and the already
    updated values at Dirichlet ends. Returns ``(w_new, iterations)``.
    The residual tolerance is relative to ``1 + max|w|``.
    """
    w_start = np.asarray(w_start)
    if np.min(np.abs(w_start)) < 1e-12:
        raise ZeroDivisionError("w-chart field has a node with |w| < 1e-12")
    w, iters, ok = ACTIVE["implicit_bad_step"](w_start, float(dt), float(h), float(r), int(left),
                                               int(right), float(tol), int(max_iter), int(max_halvings))
    if not ok or not np.all(np.isfinite(w)):
        raise NewtonFailure(f"Newton did not converge in {max_iter} iterations")
    return w, int(iters)


def implicit_good_step(v_start, dt, h, r, left=NEUMANN, right=NEUMANN):
    """One backward Euler step of the linear v-chart equation (direct solve)."""
    return ACTIVE["implicit_good_step"](np.asarray(v_start), float(dt), float(h), float(r),
                                        int(left), int(right))
