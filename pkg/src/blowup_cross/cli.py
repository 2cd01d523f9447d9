"""Command-line scenarios.

Each scenario takes a flat ``key -> value`` map (defaults below, then a
``--config`` file of ``key=value`` lines, then ``--key value`` flags), writes
CSV tracks plus ``summary.json`` into the output directory and exits with

* 0 when every enabled check passed (1 when one failed),
* 2 on a configuration error,
* 3 on a numerical failure, after writing ``diagnostic.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import compactify as cz
from . import complex_flows as cf
from . import mn_scaling as mn
from . import pde_buffer as pb
from .blowup_protocol import ProtocolError, cross_infinity
from .ode_engine import IntegratorConfig, OdeProblem

OUTPUT_ENV = "BLOWUP_CROSS_OUTPUT_DIR"
SCHEMA_VERSION = 1

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class ScenarioFailure(RuntimeError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


# defaults double as the type declaration of every key; a tuple is an enumeration
SCENARIOS = {
    "ode-cross": {
        "rhs": ("power", "asymptotic"),
        "p": 2.0, "x0": 1.0, "sign": 1.0,
        "switch_level": 0.0, "return_level": 0.01, "t_end": 0.0,
        "branch": ("auto", "real_continuation", "imaginary_plus", "imaginary_minus"),
        "rel_tol": 1e-10, "abs_tol": 1e-12,
    },
    "ode-complex": {
        "degree": 2, "x0": 1.0, "y0": 1.0, "t_end": 0.0, "rel_tol": 1e-10, "abs_tol": 1e-12,
    },
    "compactify": {
        "map": ("riemann", "power", "exponential", "asymptotic", "pde-sphere"),
        "x": 0.0, "y": 0.0, "t": 0.0, "t_star": 1.0, "a": 1.0, "sign": 1.0,
        "u": 1.0, "f": 1.0, "r_exp": 1.0, "orbit_samples": 0,
    },
    "transition-time": {
        "degree": 2, "r_list": "100,1000,10000", "eps": 1e-6, "eps_mode": ("relative", "absolute"),
        "rel_tol": 1e-10, "abs_tol": 1e-12,
    },
    "pde-cross": {
        "n_nodes": 257, "dt": 1e-5, "W_big": 1e4, "r": 1.0, "guard_band": 4, "hysteresis": 0.1,
        "t_end": 0.6, "n_snapshots": 6, "log_every": 100,
    },
    "pde-complex": {
        "n_nodes": 257, "dt": 1e-5, "epsilon": 1e-3, "r": 1.0, "t_end": 0.0, "n_outputs": 5,
        "mode": ("w", "v"),
    },
    "scaling-fit": {
        "source": ("power", "exponential", "pde"),
        "exponent": -1.0, "t_start": 0.9, "t_stop": 0.99, "n_samples": 50,
        "n_nodes": 257, "dt": 1e-5, "amp_min": 100.0, "width_amp_min": 1000.0,
    },
    "parabola-fixture": {"t": 1.4, "n_nodes": 401, "x_min": -1.0, "x_max": 1.0},
}


# ---------------------------------------------------------------- configuration


def coerce(scenario: str, key: str, raw):
    table = SCENARIOS[scenario]
    if key not in table:
        raise ConfigError(f"unknown key {key!r} for scenario {scenario}")
    default = table[key]
    try:
        if isinstance(default, tuple):
            val = str(raw)
            if val not in default:
                raise ConfigError(f"{key} must be one of {', '.join(default)}")
            return val
        if isinstance(default, bool):
            return str(raw).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            f = float(raw)
            if not f.is_integer():
                raise ConfigError(f"{key} must be an integer")
            return int(f)
        if isinstance(default, float):
            return float(raw)
        return str(raw)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value {raw!r} for {key}") from exc


def defaults(scenario: str) -> dict:
    return {k: (v[0] if isinstance(v, tuple) else v) for k, v in SCENARIOS[scenario].items()}


def read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


def resolve(scenario: str, file_values: dict, overrides: dict) -> dict:
    params = defaults(scenario)
    for source in (file_values, overrides):
        for key, raw in source.items():
            if key == "scenario":
                if raw != scenario:
                    raise ConfigError(f"config file is for scenario {raw!r}")
                continue
            params[key] = coerce(scenario, key, raw)
    return params


# ---------------------------------------------------------------- output helpers


def fnum(val) -> str:
    if val is None:
        return ""
    return "%.17g" % val


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fnum(v) if isinstance(v, (float, np.floating)) else v for v in row])


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def write_json(path: Path, payload):
    with open(path, "w") as fh:
        json.dump(jsonable(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


# ---------------------------------------------------------------- scenarios


def _integrator(p):
    return IntegratorConfig(rel_tol=p["rel_tol"], abs_tol=p["abs_tol"])


def run_ode_cross(p, out: Path):
    if p["rhs"] == "power":
        problem = OdeProblem.power(p["p"], p["x0"], sign=p["sign"])
    else:
        problem = OdeProblem.asymptotic_quadratic(p["x0"])
    try:
        traj, rec = cross_infinity(
            problem, _integrator(p),
            switch_level=p["switch_level"] or None,
            return_level=p["return_level"],
            branch_policy=None if p["branch"] == "auto" else p["branch"],
            t_end=p["t_end"] or None,
        )
    except ProtocolError as exc:
        raise ScenarioFailure(str(exc), exc.diagnostic) from exc
    rows = []
    x_all = traj.x_values()
    charts = traj.charts()
    states = np.concatenate([s.states[:, 0] for s in traj.segments])
    for t, c, s, x in zip(traj.t, charts, states, x_all):
        rows.append((float(t), c, float(s), float(x.real), float(x.imag)))
    write_csv(out / "trajectory.csv", ["t", "chart", "state", "x_re", "x_im"], rows)
    results = {
        "t_star": rec.t_star_estimate,
        "t_zero": rec.t_zero,
        "p_hat": rec.p_hat,
        "branch": rec.branch,
        "switch_in": list(rec.switch_in),
        "switch_out": [rec.switch_out[0], rec.switch_out[1]],
        "final_t": float(traj.t[-1]),
        "final_x": x_all[-1],
    }
    checks = {}
    exact = exact_t_star(p)
    if exact is not None:
        results["t_star_exact"] = exact
        checks["t_star_matches_exact"] = abs(rec.t_star_estimate - exact) <= 1e-6
    return results, checks


def exact_t_star(p):
    x0 = p["x0"]
    if p["rhs"] == "asymptotic":
        return -0.5 * math.log(x0 / (x0 + 2.0)) if x0 > 0 else None
    q = p["p"]
    if q > 1 and x0 * p["sign"] > 0:
        return abs(x0) ** (1.0 - q) / (q - 1.0)
    return None


def run_ode_complex(p, out: Path):
    x0, y0 = p["x0"], p["y0"]
    if p["degree"] not in (2, 3):
        raise ConfigError("degree must be 2 or 3")
    t_end = p["t_end"] or cf.loop_period(x0, y0)
    integ = cf.integrate_quadratic if p["degree"] == 2 else cf.integrate_cubic
    seg = integ(x0, y0, t_end, _integrator(p))
    if seg.termination != "predicate_hit":
        raise ScenarioFailure("integration stopped early", {"termination": seg.termination,
                                                            "t": seg.last_t})
    x, y = seg.states[:, 0], seg.states[:, 1]
    oracle = cf.analytic_quad_orbit if p["degree"] == 2 else cf.analytic_cubic_orbit
    exact = oracle(seg.t, x0, y0)
    scale = np.maximum(1.0, np.hypot(x, y))
    err = np.max(np.maximum(np.abs(exact.x - x), np.abs(exact.y - y)) / scale)
    write_csv(out / "track.csv", ["t", "x", "y", "x_exact", "y_exact"],
              zip(seg.t, x, y, exact.x, exact.y))
    results = {"t_end": t_end, "n_samples": len(seg.t), "orbit_rel_error": float(err)}
    checks = {"orbit_matches_oracle": err <= 1e-8}
    if p["degree"] == 2 and y0 != 0:
        geo = cf.orbit_geometry(x0, y0)
        E = cf.invariant_E(cf.ComplexState(x, y))
        drift = float(np.max(np.abs(E - geo.E)) / abs(geo.E))
        circ = float(np.max(np.abs(geo.circle_residual(x, y))) / geo.R ** 2)
        results.update(E=geo.E, R=geo.R, E_rel_drift=drift, circle_residual=circ)
        checks["E_conserved"] = drift <= 1e-7
        checks["on_circle"] = circ <= 1e-7
    return results, checks


def _orbit_samples(p, n):
    t_star, a = p["t_star"], p["a"]
    # times on both sides of t* that avoid it exactly
    d = np.concatenate([-np.geomspace(1e-3, 10.0, n // 2), np.geomspace(1e-3, 10.0, n - n // 2)])
    t = t_star + d
    m = p["map"]
    if m == "power":
        if not float(a).is_integer():
            t = t_star - np.geomspace(1e-3, 10.0, n)
        T = cz.time_to_go_power(t, t_star, a)
        return cz.circle_power(t, 1.0 / T, t_star, a)
    if m == "exponential":
        return cz.circle_exponential(t, np.exp(p["sign"] * (t - t_star)), t_star, p["sign"])
    if m == "asymptotic":
        return cz.circle_asymptotic(t, 2.0 / np.expm1(2.0 * (t_star - t)), t_star)
    if m == "riemann":
        ang = np.linspace(0, 2 * np.pi, n, endpoint=False)
        rad = np.geomspace(1e-8, 1e8, n)
        return cz.riemann_sphere(rad * np.cos(ang), rad * np.sin(ang))
    xi = np.linspace(-5, 5, n)
    f = 1.0 / np.cosh(xi)
    t = t_star - np.geomspace(1e-3, 1.0, n)
    return cz.pde_sphere(f / (t_star - t) ** p["r_exp"], t, t_star, p["r_exp"], f)


def run_compactify(p, out: Path):
    m = p["map"]
    try:
        if m == "riemann":
            pt = cz.riemann_sphere(p["x"], p["y"])
        elif m == "power":
            pt = cz.circle_power(p["t"], p["x"], p["t_star"], p["a"])
        elif m == "exponential":
            pt = cz.circle_exponential(p["t"], p["x"], p["t_star"], p["sign"])
        elif m == "asymptotic":
            pt = cz.circle_asymptotic(p["t"], p["x"], p["t_star"])
        else:
            pt = cz.pde_sphere(p["u"], p["t"], p["t_star"], p["r_exp"], p["f"])
    except (ZeroDivisionError, ValueError) as exc:
        raise ScenarioFailure(str(exc), {"map": m}) from exc
    coords = {"X": float(pt.X), "Y": float(pt.Y)}
    if isinstance(pt, cz.SpherePoint):
        coords["Z"] = float(pt.Z)
    write_csv(out / "point.csv", list(coords) + ["residual"], [list(coords.values()) + [float(pt.residual)]])
    results = {"point": coords, "residual": float(pt.residual)}
    checks = {}
    if m == "riemann":
        checks["unit_norm"] = abs(float(pt.residual)) <= 1e-12
    n = p["orbit_samples"]
    if n > 0:
        orb = _orbit_samples(p, n)
        res = np.abs(orb.residual)
        cols = ["X", "Y"] + (["Z"] if isinstance(orb, cz.SpherePoint) else [])
        data = [orb.X, orb.Y] + ([orb.Z] if isinstance(orb, cz.SpherePoint) else [])
        write_csv(out / "orbit.csv", cols + ["residual"], zip(*data, orb.residual))
        results["orbit_max_residual"] = float(res.max())
        checks["orbit_unit_norm"] = float(res.max()) <= 1e-12
    return results, checks


def run_transition_time(p, out: Path):
    try:
        radii = [float(s) for s in p["r_list"].split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError("r_list must be comma-separated numbers") from exc
    if not radii:
        raise ConfigError("r_list is empty")
    deg = p["degree"]
    if deg not in (2, 3):
        raise ConfigError("degree must be 2 or 3")
    cfg = None
    rows, times = [], {}
    try:
        for R in radii:
            for rr in ((R, 2 * R) if deg == 3 else (R,)):
                if rr not in times:
                    cfg = IntegratorConfig(rel_tol=p["rel_tol"], abs_tol=p["abs_tol"],
                                           initial_step=1e-3 / rr ** (deg - 1), max_step=1.0)
                    times[rr] = cf.transition_time(rr, p["eps"], deg, cfg, p["eps_mode"])
    except cf.TransitionTimeout as exc:
        raise ScenarioFailure(str(exc), {"degree": deg}) from exc
    checks = {}
    if deg == 2:
        prod = [times[R] * R for R in radii]
        rows = [(R, times[R], times[R] * R) for R in radii]
        write_csv(out / "transition.csv", ["R", "T", "T_times_R"], rows)
        results = {"T": [times[R] for R in radii], "T_times_R": prod}
        checks["T_times_R_constant"] = max(prod) <= 1.1 * min(prod)
    else:
        ratio = [times[2 * R] / times[R] for R in radii]
        rows = [(R, times[R], times[2 * R], q) for R, q in zip(radii, ratio)]
        write_csv(out / "transition.csv", ["R", "T", "T_2R", "ratio"], rows)
        results = {"T": [times[R] for R in radii], "ratio_2R_R": ratio}
        checks["quarter_scaling"] = all(abs(q - 0.25) <= 0.025 for q in ratio)
    results["R"] = radii
    return results, checks


def run_pde_cross(p, out: Path):
    cfg = pb.PdeConfig(n_nodes=p["n_nodes"], dt=p["dt"], W_big=p["W_big"], r=p["r"],
                       guard_band=p["guard_band"], hysteresis=p["hysteresis"], t_end=p["t_end"])
    k = max(p["n_snapshots"], 0)
    times = [cfg.t_end * i / (k - 1) for i in range(k)] if k > 1 else ([cfg.t_end] if k else [])
    try:
        run = pb.run_pde(cfg, output_times=times, log_every=p["log_every"])
    except pb.PdeFailure as exc:
        raise ScenarioFailure(str(exc), exc.diagnostic) from exc
    x = cfg.grid.x
    snap_files = []
    for i, t in enumerate(sorted(run.snapshots)):
        name = f"snapshot_{i:03d}.csv"
        pb.write_snapshot_csv(out / name, run.snapshots[t], x, cfg.W_big)
        snap_files.append({"t": run.snapshots[t].t, "file": name})
    pb.write_era_log(out / "era_log.json", run)
    locus_err = locus_error(run, cfg)
    seq = run.topology_sequence
    results = {
        "t_touch": pb.t_touch(),
        "t_exit": pb.t_exit(),
        "topology_sequence": seq,
        "max_emitted": run.max_emitted,
        "locus_max_error_over_h": locus_err / cfg.grid.h,
        "final_topology": run.final.partition.topology,
        "eras": run.final.partition.era_index,
        "snapshots": snap_files,
    }
    checks = {
        "topology_B_BGB_BGBGB": seq[:3] == ["B", "BGB", "BGBGB"],
        "loci_within_2h": locus_err <= 2 * cfg.grid.h,
        "seamless": run.max_emitted <= 10 * cfg.W_big,
    }
    if cfg.r == 1.0:
        results["final_error_vs_exact"] = pb.w_error_vs_exact(run.final, x)
    return results, checks


def locus_error(run, cfg) -> float:
    """Largest distance between a numerical crossing locus and the analytic zero set.

    Where the analytic set is empty (the few steps in which the numerical
    tip runs ahead of the analytic touch, or lags its exit) the reference
    point is the extremum of ``u - 1`` nearest to the locus: x = pi/2 before
    the exit, the nearer end of the interval after it.
    """
    worst = 0.0
    t_exit = pb.t_exit()
    for t, loci in run.loci_history:
        ref = pb.analytic_zero_set(t)
        if not ref:
            ref = [math.pi / 2] if t < t_exit else [0.0, math.pi]
        for xl in loci:
            worst = max(worst, min(abs(xl - z) for z in ref))
    return worst


def run_pde_complex(p, out: Path):
    tt = pb.t_touch()
    t_end = p["t_end"] or 2.0 * tt
    k = max(p["n_outputs"], 1)
    times = [t_end * (i + 1) / k for i in range(k)]
    grid = pb.Grid1D(p["n_nodes"])
    try:
        _, snaps = pb.run_complex_pde(p["n_nodes"], p["dt"], t_end, p["epsilon"], p["r"], p["mode"], times)
    except pb.PdeFailure as exc:
        raise ScenarioFailure(str(exc), exc.diagnostic) from exc
    errs_w, errs_v, files = [], [], []
    for i, t in enumerate(sorted(snaps)):
        fld = snaps[t]
        a, b = pb.analytic_complex_reconstruction(grid.x, fld.t, p["epsilon"], p["r"], p["mode"])
        wn, we = fld.w, a + 1j * b
        errs_w.append(float(np.max(np.abs(wn - we))))
        errs_v.append(float(np.max(np.abs(1.0 / wn - 1.0 / we))))
        name = f"complex_{i:03d}.csv"
        write_csv(out / name, ["x", "a", "b", "a_exact", "b_exact"], zip(grid.x, fld.a, fld.b, a, b))
        files.append({"t": fld.t, "file": name})
    finite = all(np.all(np.isfinite(s.a)) and np.all(np.isfinite(s.b)) for s in snaps.values())
    results = {
        "t_touch": tt,
        "t_end": t_end,
        "output_times": [snaps[t].t for t in sorted(snaps)],
        "sup_error_w": errs_w,
        "sup_error_v": errs_v,
        "max_abs_w": [float(np.max(np.abs(snaps[t].w))) for t in sorted(snaps)],
        "snapshots": files,
    }
    checks = {"finite_fields": bool(finite), "reconstruction_within_1e-3": max(errs_w) <= 1e-3}
    return results, checks


def run_scaling_fit(p, out: Path):
    src = p["source"]
    results = {}
    checks = {}
    if src == "pde":
        try:
            t, amp, width = pb.tip_series(pb.PdeConfig(n_nodes=p["n_nodes"], dt=p["dt"]))
        except pb.PdeFailure as exc:
            raise ScenarioFailure(str(exc), exc.diagnostic) from exc
        sel = amp >= p["amp_min"]
        fit = mn.fit_blowup_scaling(t[sel], amp[sel])
        wsel = amp >= p["width_amp_min"]
        wexp, wrms = mn.fit_power_law_given_t_star(t[wsel], width[wsel], fit.t_star_hat)
        write_csv(out / "series.csv", ["t", "amplitude", "width"], zip(t, amp, width))
        pred = mn.predict_exponents(mn.ScalingSignature(a=2.0, s=2.0))
        results.update(width_exponent=wexp, width_rms=wrms,
                       predicted_amplitude=pred.amplitude_exponent, predicted_width=pred.width_exponent)
        checks["amplitude_exponent"] = abs(fit.exponent_hat - pred.amplitude_exponent) <= 0.05
        checks["width_exponent"] = abs(wexp - pred.width_exponent) <= 0.1
    else:
        t = np.linspace(p["t_start"], p["t_stop"], p["n_samples"])
        amp = (1.0 - t) ** p["exponent"] if src == "power" else np.exp(t)
        fit = mn.fit_blowup_scaling(t, amp)
        write_csv(out / "series.csv", ["t", "amplitude"], zip(t, amp))
        if src == "power":
            checks["t_star_recovered"] = abs(fit.t_star_hat - 1.0) <= 1e-3
            checks["exponent_recovered"] = abs(fit.exponent_hat - p["exponent"]) <= 0.01
        else:
            checks["rejected"] = not fit.accepted
    results.update(t_star_hat=fit.t_star_hat, exponent_hat=fit.exponent_hat, residual=fit.residual,
                   accepted=fit.accepted)
    return results, checks


def run_parabola(p, out: Path):
    x = np.linspace(p["x_min"], p["x_max"], p["n_nodes"])
    snap = mn.parabola_fixture(p["t"], x)
    write_csv(out / "field.csv", ["x", "v", "w"],
              ((xi, vi, None if pole else wi) for xi, vi, wi, pole in zip(x, snap.v, snap.w, snap.poles)))
    res_at = [abs(c * c + 0.1 - 0.1 * p["t"]) for c in snap.crossings]
    results = {"crossings": list(snap.crossings), "min_v": float(snap.v.min()), "n_poles": int(snap.poles.sum())}
    checks = {"crossings_are_zeros": all(r <= 1e-12 for r in res_at)}
    return results, checks


RUNNERS = {
    "ode-cross": run_ode_cross,
    "ode-complex": run_ode_complex,
    "compactify": run_compactify,
    "transition-time": run_transition_time,
    "pde-cross": run_pde_cross,
    "pde-complex": run_pde_complex,
    "scaling-fit": run_scaling_fit,
    "parabola-fixture": run_parabola,
}


# ---------------------------------------------------------------- driver


def run(scenario: str, params: dict, output_dir) -> int:
    """Execute one scenario; returns the exit code."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        results, checks = RUNNERS[scenario](params, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioFailure as exc:
        write_json(out / "diagnostic.json", {"scenario": scenario, "parameters": params,
                                             "error": str(exc), "diagnostic": exc.diagnostic})
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    passed = all(checks.values())
    write_json(out / "summary.json", {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "parameters": params,
        "results": results,
        "checks": checks,
        "passed": passed,
    })
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _sweep_job(args):
    scenario, params, out = args
    return run(scenario, params, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blowup-cross", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name, table in SCENARIOS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="file of key=value lines")
        sp.add_argument("--output-dir", help=f"defaults to ${OUTPUT_ENV}/<scenario> or ./runs/<scenario>")
        sp.add_argument("--sweep", help="key=v1,v2,... runs one scenario per value in parallel")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes for --sweep")
        for key, default in table.items():
            shown = "|".join(default) if isinstance(default, tuple) else default
            sp.add_argument(f"--{key}", dest=f"param_{key}", default=None, metavar="VALUE",
                            help=f"default: {shown}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    scenario = args.scenario
    overrides = {k[len("param_"):]: v for k, v in vars(args).items()
                 if k.startswith("param_") and v is not None}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        params = resolve(scenario, file_values, overrides)
        sweep = None
        if args.sweep:
            key, _, vals = args.sweep.partition("=")
            values = [v for v in vals.split(",") if v]
            if not values:
                raise ConfigError("--sweep needs key=v1,v2,...")
            sweep = (key, [coerce(scenario, key, v) for v in values], values)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    base = os.environ.get(OUTPUT_ENV, "runs")
    out = Path(args.output_dir) if args.output_dir else Path(base) / scenario
    if sweep is None:
        return run(scenario, params, out)
    key, typed, raw = sweep
    jobs = [(scenario, {**params, key: v}, out / f"{key}={r}") for v, r in zip(typed, raw)]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        codes = list(pool.map(_sweep_job, jobs))
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
