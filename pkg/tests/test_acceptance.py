"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest, where
the lines are repeated in the terminal summary.
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from blowup_cross import compactify as cz
from blowup_cross import complex_flows as cf
from blowup_cross import mn_scaling as mn
from blowup_cross import pde_buffer as pb
from blowup_cross.blowup_protocol import cross_infinity, detect_power_law
from blowup_cross.ode_engine import IntegratorConfig, OdeProblem, integrate_until, magnitude_reached

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # running as a script
    ACCEPTANCE_LINES = {}


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def test_c01_quadratic_crossing():
    t0 = time.perf_counter()
    traj, rec = cross_infinity(OdeProblem.power(2, 1.0), switch_level=100, return_level=0.01)
    elapsed = time.perf_counter() - t0
    x = traj.x_values()
    t_end = traj.t[-1]
    # the tail ends at t = 2 t*; compare with the closed form there
    err_x2 = abs(x[-1].real - 1.0 / (1.0 - t_end))
    err_t = abs(rec.t_star_estimate - 1.0)
    ok = err_t <= 1e-6 and err_x2 <= 1e-6 and abs(t_end - 2.0) <= 1e-6 and elapsed < 1.0
    report(1, ok, f"|t*-1|={err_t:.1e} |x(2)+1|={err_x2:.1e} runtime={elapsed:.2f}s")


def test_c02_cubic_crossing():
    traj, rec = cross_infinity(OdeProblem.power(3, 1.0), switch_level=25, return_level=0.04)
    x = traj.x_values()
    t = traj.t
    # exact magnitude for dx/dt = x**3 with t* = 1/2
    post = (t > 0.5) & np.isfinite(x)
    exact = 1.0 / np.sqrt(2.0 * (t[post] - 0.5))
    err = float(np.max(np.abs(np.abs(x[post]) - exact)))
    err_t = abs(rec.t_star_estimate - 0.5)
    ok = err_t <= 1e-6 and err <= 1e-5 and rec.branch == "imaginary_plus" and np.all(x[post].imag > 0)
    report(2, ok, f"|t*-0.5|={err_t:.1e} max||x|-1/sqrt(2(t-t*))|={err:.1e} branch={rec.branch}")


def test_c02_literal_normalisation_is_inconsistent():
    """x' = x**3 with x(0) = 1 gives |x| = 1/sqrt(2(t - t*)); 1/sqrt(t - t*) is off by sqrt(2)."""
    traj, rec = cross_infinity(OdeProblem.power(3, 1.0), switch_level=25, return_level=0.04)
    tail = traj.segments[-1]
    ratio = tail.states[:, 0] * np.sqrt(tail.t - 0.5)
    assert np.allclose(ratio, 1.0 / math.sqrt(2.0), rtol=1e-8)


def test_c03_asymptotic():
    traj, rec = cross_infinity(OdeProblem.asymptotic_quadratic(1.0))
    t_star = -0.5 * math.log(1.0 / 3.0)
    x = traj.x_values()
    t = traj.t
    m = np.abs(t - t_star) > 1e-2
    exact = 2.0 / np.expm1(2.0 * (t_star - t[m]))
    rel = float(np.max(np.abs(x[m].real - exact) / np.abs(exact)))
    err_t = abs(rec.t_star_estimate - t_star)
    ok = err_t <= 1e-5 and rel <= 1e-5 and np.all(x[m].imag == 0)
    report(3, ok, f"|t*-t*_exact|={err_t:.1e} max rel err={rel:.1e} over {m.sum()} samples")


def test_c04_exponent_detection():
    errs = {}
    for p, kw in ((2, {}), (3, {"switch_level": 25, "return_level": 0.04}), (4, {})):
        _, rec = cross_infinity(OdeProblem.power(p, 1.0), **kw)
        errs[p] = abs(rec.p_hat - p)
    seg = integrate_until(OdeProblem.asymptotic_quadratic(1.0), IntegratorConfig(), magnitude_reached(1e4))
    xs = seg.states[:, 0]
    xs = xs[xs >= 100]
    fit = detect_power_law(np.column_stack([xs, 2 * xs + xs * xs]))
    ok = max(errs.values()) <= 1e-3 and fit.accepted and 1.95 <= fit.p_hat <= 2.0
    report(4, ok, f"max|p_hat-p|={max(errs.values()):.1e} asymptotic p_hat={fit.p_hat:.4f} "
                  f"accepted={fit.accepted}")


def test_c05_compactification():
    n = 1000
    d = np.concatenate([-np.geomspace(1e-4, 10, n // 2), np.geomspace(1e-4, 10, n // 2)])
    t_star = 1.0
    t = t_star + d
    before = t_star - np.geomspace(1e-4, 10, n)
    x_cubic = 1.0 / np.sqrt(2.0 * (t_star - before))
    res = {
        "power a=1": cz.circle_power(t, 1.0 / (t_star - t), t_star, 1.0).residual,
        # cubic law: 2 x**2 = 1/(t* - t) sits on the a = 1 circle
        "power, cubic x^2 form": cz.circle_power(before, 2.0 * x_cubic ** 2, t_star, 1.0).residual,
        "power a=1/(p-1), p=4": cz.circle_power(before, (t_star - before) ** (-1 / 3), t_star, 1 / 3).residual,
        "exponential": cz.circle_exponential(t, np.exp(t - t_star), t_star, 1.0).residual,
        "asymptotic": cz.circle_asymptotic(t, 2.0 / np.expm1(2.0 * (t_star - t)), t_star).residual,
    }
    rng = np.random.default_rng(12)
    zx, zy = rng.normal(scale=10.0, size=(2, n)) * np.exp(rng.uniform(-15, 15, (2, n)))
    res["riemann"] = cz.riemann_sphere(zx, zy).residual
    worst = {k: float(np.max(np.abs(v))) for k, v in res.items()}

    traj, rec = cross_infinity(OdeProblem.power(2, 1.0), switch_level=100, return_level=0.01)
    th, tt = [], []
    for seg in traj.segments:
        if seg.chart == "good":
            pt = cz.circle_from_inverse(seg.t, seg.states[:, 0], rec.t_star_estimate)
        else:
            pt = cz.circle_power(seg.t, seg.states[:, 0], rec.t_star_estimate)
        th.append(pt.angle)
        tt.append(seg.t)
    th = np.unwrap(np.concatenate(th))
    dth, dtt = np.diff(th), np.diff(np.concatenate(tt))
    monotone = bool(np.all(dth >= 0))
    # |d theta/dt| = 2/(1 + (t*-t)**2) <= 2 on the orbit
    bounded = bool(np.all(dth <= 2.0 * dtt * (1 + 1e-6) + 1e-12))
    passes_pi = th[0] < math.pi < th[-1]
    ok = max(worst.values()) <= 1e-12 and monotone and bounded and passes_pi
    report(5, ok, f"max unit-norm residual={max(worst.values()):.1e} theta monotone={monotone} "
                  f"step-bounded={bounded}")


def test_c06_complex_quadratic():
    lines = []
    ok = True
    for x0, y0 in ((1.0, 1.0), (1.0, 1e-3), (0.0, 1.0)):
        T = cf.loop_period(x0, y0)
        seg = cf.integrate_quadratic(x0, y0, T, IntegratorConfig(rel_tol=1e-10))
        x, y = seg.states[:, 0], seg.states[:, 1]
        geo = cf.orbit_geometry(x0, y0)
        drift = float(np.max(np.abs(cf.invariant_E(cf.ComplexState(x, y)) - geo.E)) / abs(geo.E))
        circ = float(np.max(np.abs(geo.circle_residual(x, y))) / geo.R ** 2)
        exact = cf.analytic_quad_orbit(seg.t, x0, y0)
        scale = np.maximum(1.0, np.hypot(x, y))
        point = float(np.max(np.maximum(np.abs(exact.x - x), np.abs(exact.y - y)) / scale))
        ok &= seg.termination == "predicate_hit" and drift <= 1e-7 and circ <= 1e-7 and point <= 1e-8
        lines.append(f"({x0:g},{y0:g}): dE/E={drift:.1e} circ/R^2={circ:.1e} pt={point:.1e}")
    report(6, ok, "; ".join(lines))


def test_c07_transition_time():
    prods = [cf.transition_time(R, 1e-6, 2) * R for R in (1e2, 1e3, 1e4)]
    ratios = [cf.transition_time(2 * R, 1e-6, 3) / cf.transition_time(R, 1e-6, 3) for R in (1e2, 1e3)]
    ok = max(prods) <= 1.1 * min(prods) and all(abs(q - 0.25) <= 0.025 for q in ratios)
    report(7, ok, f"T*R={['%.4f' % p for p in prods]} T(2R)/T(R)={['%.4f' % q for q in ratios]}")


def _final_w(n, dt, t_end):
    cfg = pb.PdeConfig(n_nodes=n, dt=dt, t_end=t_end)
    run = pb.run_pde(cfg, track_loci=False, log_every=10 ** 9)
    assert run.final.partition.topology == "B"
    return run.final.values, cfg.grid.x


@pytest.mark.slow
def test_c08_pde_convergence():
    t_end = 0.25
    ladder = [(129, 4e-4), (257, 2e-4), (513, 1e-4)]
    # spatial error: first-order time error removed by Richardson extrapolation in dt
    h_err = []
    for n, _ in ladder:
        w1, x = _final_w(n, 2e-4, t_end)
        w2, _ = _final_w(n, 1e-4, t_end)
        h_err.append(float(np.max(np.abs(2 * w2 - w1 - pb.analytic_w(x, t_end)))))
    # time error at the finest grid of the ladder
    dt_err = []
    for _, dt in ladder:
        w, x = _final_w(513, dt, t_end)
        dt_err.append(float(np.max(np.abs(w - pb.analytic_w(x, t_end)))))
    h_ratio = [h_err[i] / h_err[i + 1] for i in range(2)]
    dt_ratio = [dt_err[i] / dt_err[i + 1] for i in range(2)]
    ok = min(h_ratio) >= 3.5 and all(1.7 <= r <= 2.3 for r in dt_ratio)
    report(8, ok, f"h-halving ratios={['%.2f' % r for r in h_ratio]} "
                  f"dt-halving ratios={['%.2f' % r for r in dt_ratio]} at t={t_end}")


@pytest.fixture(scope="module")
def default_pde_run():
    cfg = pb.PdeConfig()
    t0 = time.perf_counter()
    run = pb.run_pde(cfg)
    return cfg, run, time.perf_counter() - t0


def locus_error(run):
    worst = 0.0
    for t, loci in run.loci_history:
        ref = pb.analytic_zero_set(t)
        if not ref:
            ref = [math.pi / 2] if t < pb.t_exit() else [0.0, math.pi]
        for xl in loci:
            worst = max(worst, min(abs(xl - z) for z in ref))
    return worst


@pytest.mark.slow
def test_c09_pde_crossing(default_pde_run):
    cfg, run, elapsed = default_pde_run
    seq = run.topology_sequence
    err = locus_error(run)
    h = cfg.grid.h
    ok = (seq[:3] == ["B", "BGB", "BGBGB"] and err <= 2 * h and run.max_emitted <= 10 * cfg.W_big
          and elapsed < 60)
    report(9, ok, f"topologies={'->'.join(seq)} locus err={err / h:.2f}h "
                  f"max emitted={run.max_emitted:.0f} runtime={elapsed:.1f}s")


@pytest.mark.slow
def test_c10_mn_consistency():
    t, amp, width = pb.tip_series(pb.PdeConfig())
    sel = amp >= 100
    fit = mn.fit_blowup_scaling(t[sel], amp[sel])
    last = amp >= amp.max() / 10
    w_exp, _ = mn.fit_power_law_given_t_star(t[last], width[last], fit.t_star_hat)
    pred = mn.predict_exponents(mn.ScalingSignature(a=2, s=2))
    ok = abs(fit.exponent_hat - pred.amplitude_exponent) <= 0.05 and abs(w_exp - pred.width_exponent) <= 0.1
    report(10, ok, f"amplitude exponent={fit.exponent_hat:.4f} width exponent={w_exp:.4f} "
                   f"t*_hat={fit.t_star_hat:.5f}")


@pytest.mark.slow
def test_c11_complex_pde():
    n, dt, eps = 257, 1e-5, 1e-3
    tt = pb.t_touch()
    x = pb.Grid1D(n).x
    times = [2 * tt * k / 5 for k in range(1, 6)]
    final, snaps = pb.run_complex_pde(n, dt, 2 * tt, eps, output_times=times)
    finite = all(np.isfinite(s.a).all() and np.isfinite(s.b).all() for s in snaps.values())
    errs, verrs = [], []
    for t in sorted(snaps):
        fld = snaps[t]
        a, b = pb.analytic_complex_reconstruction(x, fld.t, eps)
        errs.append(float(np.max(np.abs(fld.w - (a + 1j * b)))))
        verrs.append(float(np.max(np.abs(1 / fld.w - 1 / (a + 1j * b)))))
    _, real_snaps = pb.run_complex_pde(n, dt, 0.9 * tt, 0.0, output_times=[0.9 * tt])
    b_zero = all(np.all(s.b == 0.0) for s in real_snaps.values())
    ok = finite and max(errs) <= 1e-3 and b_zero
    report(11, ok, f"finite={finite} b==0 for eps=0: {b_zero} sup|w-w_exact| per time="
                   f"{['%.1e' % e for e in errs]} (v-space {['%.1e' % e for e in verrs]})")


SCENARIOS = [
    ["ode-cross"],
    ["ode-cross", "--rhs", "asymptotic"],
    ["ode-cross", "--p", "3", "--switch_level", "25", "--return_level", "0.04"],
    ["ode-complex"],
    ["compactify", "--map", "power", "--orbit_samples", "200"],
    ["transition-time"],
    ["pde-cross"],
    ["pde-complex"],
    ["scaling-fit", "--source", "pde"],
    ["parabola-fixture"],
]


def _run_cli(argv, out):
    cmd = [sys.executable, "-m", "blowup_cross", *argv, "--output-dir", str(out)]
    return subprocess.run(cmd, capture_output=True, text=True).returncode


@pytest.mark.slow
def test_c12_determinism(tmp_path):
    mismatched = []
    for i, argv in enumerate(SCENARIOS):
        dirs = [tmp_path / f"{i}_{k}" for k in "ab"]
        codes = [_run_cli(argv, d) for d in dirs]
        files_a = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(dirs[1]) for p in dirs[1].rglob("*") if p.is_file())
        if codes[0] != codes[1] or files_a != files_b or not files_a:
            mismatched.append(argv[0])
            continue
        for rel in files_a:
            if (dirs[0] / rel).read_bytes() != (dirs[1] / rel).read_bytes():
                mismatched.append(f"{argv[0]}:{rel}")
    ok = not mismatched
    report(12, ok, f"{len(SCENARIOS)} scenarios run twice, byte-identical"
                   + ("" if ok else f"; differences in {mismatched}"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
