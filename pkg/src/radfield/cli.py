"""Batch driver: ``radfield <subcommand> [--config PATH] [--out DIR] [--seed N] [--threads N]``.

Every analysis subcommand writes ``<subcommand>.json`` into the output
directory with a ``checks`` list; each check carries its value, the tolerance
it was judged against and the verdict. ``report`` folds those files into
``report.json``. Exit codes: 0 success, 1 invalid configuration, 2 numerical
precondition failure, 3 failed checks under ``report --check``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import corpus as C
from . import grids
from .exterior import (critical_exponent, fit_decay, growth_factor, indicator_l6_closed_form,
                       l6_exterior_scan, lemma_y_scan, exterior_y_zonal)
from .freewave import RadialPair, evolve, radial_profile_values
from .grids import LineGrid, ScalarField3, UniformGrid3, sphere_quadrature
from .io import FormatError, read_fld3, read_prof, write_csv, write_fld3, write_json, write_prof
from .nonlinear import (NonlinearConfig, embedding_check, extract_scattering_profile,
                        regularity_gain, s_of_r, solve_radial, tail_decompose, tail_exponent)
from .radiation import (ansatz_residual, forward, inverse_fourier, inverse_radon3, synthesize)
from .sobolev import DataPair, RadiationProfile, hdot_norm_sq_cyl, pair_norm

ENV_OUT = "RADFIELD_OUT_DIR"
ENV_THREADS = "RADFIELD_THREADS"

DEFAULTS = {
    "experiment": "",
    "n": 64,
    "half_width": 16.0,
    "n_theta": 24,
    "n_phi": 48,
    "m": 1024,
    "s_max": 32.0,
    "betas": [0.6, 0.8, 1.0],
    "beta": 0.8,
    "p": 4.0,
    "radii": [2.0, 4.0, 8.0, 16.0, 32.0],
    "times": [4.0, 8.0, 16.0],
    "t": 1.0,
    "corpus": "gaussian",
    "sigma": 0.5,
    "u0": None,
    "u1": None,
    "input": None,
    "route": "fourier",
    "direction": "plus",
    "a": 0.0,
    "b": 1.0,
    "dr": 0.005,
    "r_max": 30.0,
    "T": 10.0,
    "amplitude": 2.0,
    "kind": "defocusing",
    "save_every": 200,
    "tail_line_m": 2 ** 21,
    "tail_line_s_max": 131072.0,
    "tail_dr": 0.0625,
    "composite": False,
    "out": None,
    "seed": 0,
    "threads": None,
}

_CHOICES = {
    "corpus": ("gaussian", "bump", "synthetic-tail", "file"),
    "route": ("fourier", "radon"),
    "direction": ("plus", "minus"),
    "kind": ("defocusing", "focusing"),
}
_POSITIVE = ("n", "half_width", "n_theta", "n_phi", "m", "s_max", "dr", "r_max", "T",
             "save_every", "tail_line_m", "tail_line_s_max", "tail_dr")


class ConfigError(ValueError):
    pass


def _check_type(key, value, default):
    if default is None or value is None:
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, (int, float)):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, list):
        ok = isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                             for v in value)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"config key '{key}' has the wrong type ({type(value).__name__})")


def load_config(path=None, overrides=None) -> dict:
    """Defaults <- environment <- config file <- flags. Unknown keys are rejected."""
    cfg = dict(DEFAULTS)
    if os.environ.get(ENV_OUT):
        cfg["out"] = os.environ[ENV_OUT]
    if os.environ.get(ENV_THREADS):
        try:
            cfg["threads"] = int(os.environ[ENV_THREADS])
        except ValueError as exc:
            raise ConfigError(f"{ENV_THREADS} must be an integer") from exc
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        for k, v in raw.items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key '{k}'")
            _check_type(k, v, DEFAULTS[k])
            cfg[k] = v
    for k, v in (overrides or {}).items():
        if v is not None:
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key '{k}'")
            _check_type(k, v, DEFAULTS[k])
            cfg[k] = v
    for k, choices in _CHOICES.items():
        if cfg[k] not in choices:
            raise ConfigError(f"config key '{k}' must be one of {', '.join(choices)}")
    for k in _POSITIVE:
        if not cfg[k] > 0:
            raise ConfigError(f"config key '{k}' must be positive")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError("threads must be at least 1")
    if cfg["corpus"] == "file" and cfg["u0"] is None and cfg["u1"] is None:
        raise ConfigError("corpus 'file' needs 'u0' and/or 'u1'")
    if not cfg["radii"] or any(r <= 0 for r in cfg["radii"]):
        raise ConfigError("radii must be a non-empty list of positive numbers")
    cfg["out"] = cfg["out"] or "."
    return cfg


def _set_threads(n):
    if n is None:
        return
    grids.set_workers(n)
    try:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except (ImportError, ValueError):
        pass


# ------------------------------------------------------------ helpers ---


def _check(name, value, tol, op="<=", criterion=None):
    v = float(value)
    ok = {"<=": v <= tol, ">=": v >= tol, "<": v < tol, "==": v == tol}[op]
    return {"name": name, "value": v, "tolerance": float(tol), "op": op, "pass": bool(ok),
            "criterion": criterion}


def _grid(cfg):
    return UniformGrid3(int(cfg["n"]), float(cfg["half_width"]))


def _sphere(cfg):
    return sphere_quadrature(int(cfg["n_theta"]), int(cfg["n_phi"]))


def _line(cfg):
    return LineGrid(int(cfg["m"]), float(cfg["s_max"]))


def _data(cfg):
    """Named data pairs from the corpus selector."""
    g = _grid(cfg)
    if cfg["corpus"] == "gaussian":
        return C.gaussian_corpus(g, cfg["seed"])
    if cfg["corpus"] == "file":
        u0 = read_fld3(cfg["u0"]) if cfg["u0"] else None
        u1 = read_fld3(cfg["u1"]) if cfg["u1"] else None
        ref = u0 or u1
        u0 = u0 or ScalarField3.zeros(ref.grid)
        u1 = u1 or ScalarField3.zeros(ref.grid)
        return [(Path(cfg["u0"] or cfg["u1"]).stem, DataPair(u0, u1, cfg["beta"]))]
    raise ConfigError(f"corpus '{cfg['corpus']}' does not provide 3D data for this subcommand")


def _inputs(cfg):
    inp = cfg["input"]
    if inp is None:
        raise ConfigError("this subcommand needs 'input'")
    return [inp] if isinstance(inp, str) else list(inp)


def _out(cfg, name):
    d = Path(cfg["out"])
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _emit(cfg, sub, payload):
    payload = {"subcommand": sub, "experiment": cfg["experiment"], "seed": cfg["seed"], **payload}
    write_json(_out(cfg, f"{sub}.json"), payload)
    return payload


# -------------------------------------------------------- subcommands ---


def cmd_forward(cfg):
    sph, line = _sphere(cfg), _line(cfg)
    rows = {}
    for name, p in _data(cfg):
        G = forward(p, sph, line, cfg["direction"])
        write_prof(_out(cfg, f"{name}.prof"), G)
        rows[name] = {"imag_residue": forward.last_residue}
    checks = [_check(f"{k}/imag_residue", v["imag_residue"], 1e-6) for k, v in rows.items()]
    return _emit(cfg, "forward", {"profiles": rows, "checks": checks})


def cmd_inverse(cfg):
    grid = _grid(cfg)
    rows = {}
    for path in _inputs(cfg):
        G = read_prof(path)
        p = inverse_fourier(G, grid) if cfg["route"] == "fourier" else inverse_radon3(G, grid)
        stem = Path(path).stem
        write_fld3(_out(cfg, f"{stem}_u0.fld3"), p.u0)
        write_fld3(_out(cfg, f"{stem}_u1.fld3"), p.u1)
        rows[stem] = {"route": cfg["route"], "norm": pair_norm(p, cfg["beta"])}
    return _emit(cfg, "inverse", {"fields": rows, "checks": []})


def cmd_evolve(cfg):
    rows = {}
    for name, p in _data(cfg):
        st = evolve(p, float(cfg["t"]))
        write_fld3(_out(cfg, f"{name}_t{cfg['t']:g}_u.fld3"), st.u0)
        write_fld3(_out(cfg, f"{name}_t{cfg['t']:g}_ut.fld3"), st.u1)
        rows[name] = {"t": cfg["t"], "diagnostics": st.diagnostics}
    return _emit(cfg, "evolve", {"fields": rows, "checks": []})


def cmd_synthesize(cfg):
    grid = _grid(cfg)
    rows = {}
    for path in _inputs(cfg):
        G = read_prof(path)
        u = synthesize(G, float(cfg["t"]), grid)
        stem = Path(path).stem
        write_fld3(_out(cfg, f"{stem}_t{cfg['t']:g}.fld3"), u)
        rows[stem] = {"t": cfg["t"]}
    return _emit(cfg, "synthesize", {"fields": rows, "checks": []})


def cmd_isometry(cfg):
    sph, line = _sphere(cfg), _line(cfg)
    rows, checks, cols = {}, [], {"pair": [], "beta": [], "lhs": [], "rhs": [], "rel_error": []}
    for name, p in _data(cfg):
        G = forward(p, sph, line, "plus")
        rows[name] = {}
        for b in cfg["betas"]:
            lhs = 2.0 * hdot_norm_sq_cyl(G, b - 1.0)
            rhs = pair_norm(p, b) ** 2
            err = abs(lhs - rhs) / rhs
            rows[name][f"{b:g}"] = err
            checks.append(_check(f"{name}/beta={b:g}", err, 0.02, criterion=1))
            for k, v in zip(cols, (name, b, lhs, rhs, err)):
                cols[k].append(v)
    write_csv(_out(cfg, "isometry.csv"), cols, {"tolerance": 0.02})
    return _emit(cfg, "isometry-check", {"rel_errors": rows, "checks": checks})


def cmd_convergence(cfg):
    sph, line = _sphere(cfg), _line(cfg)
    beta = cfg["beta"]
    rows, checks = {}, []
    for name, p in _data(cfg):
        G = forward(p, sph, line, "plus")
        E = [ansatz_residual(p, G, float(t), beta) for t in cfg["times"]]
        norm = pair_norm(p, beta)
        rows[name] = {"times": cfg["times"], "E": E, "data_norm": norm}
        checks.append(_check(f"{name}/monotone", float(np.all(np.diff(E) < 0)), 1.0, ">=", 3))
        checks.append(_check(f"{name}/E_last_over_norm", E[-1] / norm, 0.1, criterion=3))
    return _emit(cfg, "convergence-check", {"beta": beta, "pairs": rows, "checks": checks})


def cmd_l6(cfg):
    a, b = cfg["a"], cfg["b"]
    line, sph = _line(cfg), _sphere(cfg)
    radii = np.asarray(cfg["radii"], dtype=float)
    rows, checks = {}, []
    cols = {"profile": [], "R": [], "value": [], "ratio": []}
    for name, G in C.compact_profiles(line, sph, a, b):
        sc = l6_exterior_scan(G, radii, a, b)
        ratio = sc.extra["ratio"]
        rows[name] = {"values": sc.values, "exponent": sc.exponent, "ratio": ratio}
        checks.append(_check(f"{name}/ratio_growth", growth_factor(ratio), 1.1, criterion=6))
        if name == "indicator" and (a, b) == (0.0, 1.0):
            rel = np.abs(sc.values / indicator_l6_closed_form(radii) - 1.0).max()
            rows[name]["closed_form_rel"] = rel
            checks.append(_check("indicator/closed_form", rel, 0.1, criterion=6))
        for R, v, q in zip(radii, sc.values, ratio):
            for k, x in zip(cols, (name, R, v, q)):
                cols[k].append(x)
    write_csv(_out(cfg, "l6_scan.csv"), cols)
    return _emit(cfg, "l6-scan", {"profiles": rows, "checks": checks})


def cmd_y(cfg):
    a, b, p = cfg["a"], cfg["b"], cfg["p"]
    line, sph = _line(cfg), sphere_quadrature(4, 8)
    radii = np.asarray(cfg["radii"], dtype=float)
    G = C.bump_profile(line, sph, a, b)
    sc = lemma_y_scan(G, p, radii, a, b)
    slope_tol = -(p - 3.0) / (2.0 * p) + 0.05
    checks = [_check("bump/slope", sc.exponent, slope_tol, criterion=7),
              _check("bump/ratio_growth", growth_factor(sc.extra["ratio"]), 1.1, criterion=7)]
    write_csv(_out(cfg, "y_scan.csv"), {"R": radii, "value": sc.values, "ratio": sc.extra["ratio"]},
              {"p": p, "exponent": sc.exponent})
    return _emit(cfg, "y-scan", {"values": sc.values, "exponent": sc.exponent,
                                 "ratio": sc.extra["ratio"], "checks": checks})


def _tail_data(cfg):
    e = C.pointwise_tail_exponent(cfg["sigma"], cfg["p"])
    S = float(cfg["tail_line_s_max"])
    return C.radial_pair_from_profile(float(cfg["tail_dr"]), S, lambda x: C.tail_profile_values(x, e))


def cmd_s_scan(cfg):
    ncfg = NonlinearConfig(cfg["p"])
    radii = np.asarray(cfg["radii"], dtype=float)
    if cfg["corpus"] == "synthetic-tail":
        line = LineGrid(int(cfg["tail_line_m"]), float(cfg["tail_line_s_max"]))
        p0 = _tail_data(cfg)
        G = RadiationProfile.from_zonal(line, sphere_quadrature(4, 8),
                                        radial_profile_values(p0, line.s(), "minus"), "minus")
        sc = s_of_r(G, ncfg, radii)
    else:
        f = lambda r: C.bump(r, -1.0, 1.0)  # noqa: E731
        p0 = RadialPair.from_functions(cfg["dr"], cfg["r_max"], None, f)
        sc = s_of_r(p0, ncfg, radii)
    write_csv(_out(cfg, "s_scan.csv"), {"r": radii, "S": sc.values}, {"exponent": sc.exponent})
    return _emit(cfg, "s-scan", {"values": sc.values, "exponent": sc.exponent, "checks": []})


def cmd_tail(cfg):
    ncfg = NonlinearConfig(cfg["p"])
    radii = np.asarray(cfg["radii"], dtype=float)
    line = LineGrid(int(cfg["tail_line_m"]), float(cfg["tail_line_s_max"]))
    sph = sphere_quadrature(4, 8)
    p0 = _tail_data(cfg)
    s = line.s()
    Gp = RadiationProfile.from_zonal(line, sph, radial_profile_values(p0, s, "plus"), "plus")
    sc = tail_exponent(Gp, ncfg, radii)
    beta = cfg["beta"] if 0.5 < cfg["beta"] < ncfg.s_p else 0.7
    rg = regularity_gain(Gp, ncfg, beta, sc, 4.0)
    expect = 2.0 ** (ncfg.s_p - beta - cfg["sigma"])
    checks = [
        _check("tail_exponent_error", abs(sc.exponent + cfg["sigma"]), 0.05, criterion=11),
        _check("regularity_finite", float(rg.finite), 1.0, ">=", 11),
        _check("series_ratio_rel_error", abs(rg.series_ratio / expect - 1.0), 0.1, criterion=11),
    ]
    out = {"tail_exponent": sc.exponent, "tail_values": sc.values, "beta": beta,
           "finite": rg.finite, "series_ratio": rg.series_ratio, "expected_ratio": expect,
           "norm_estimate": rg.norm_estimate}
    if cfg["composite"]:
        Gm = RadiationProfile.from_zonal(line, sph, radial_profile_values(p0, s, "minus"), "minus")
        S = s_of_r(Gm, ncfg, radii)
        dec = tail_decompose(Gm, 1.0, ncfg.s_p - 1.0)
        comp = np.zeros_like(radii)
        for P in [dec.g0, *dec.plus, *dec.minus]:
            if np.any(P.column()):
                comp += [exterior_y_zonal(P, ncfg.p, float(R)) for R in radii]
        cslope = fit_decay(radii, comp).exponent
        out.update(S=S.values, S_exponent=S.exponent, composite=comp, composite_exponent=cslope)
        checks.append(_check("S_vs_composite_slope", abs(S.exponent - cslope), 0.07, criterion=11))
    write_csv(_out(cfg, "tail_scan.csv"), {"r": radii, "tail": sc.values}, {"exponent": sc.exponent})
    return _emit(cfg, "tail-scan", {**out, "checks": checks})


def cmd_nl(cfg):
    ncfg = NonlinearConfig(cfg["p"], cfg["kind"])
    A = cfg["amplitude"]
    p0 = RadialPair.from_functions(cfg["dr"], cfg["r_max"], lambda r: A * np.exp(-r * r), None)
    traj = solve_radial(p0, ncfg, float(cfg["T"]), save_every=int(cfg["save_every"]))
    E = traj.energy
    drift = float(np.abs(E - E[0]).max() / abs(E[0])) if E[0] != 0 else 0.0
    cols = {"t": [], "r": [], "v": []}
    r = traj.r
    for k, t in enumerate(traj.times):
        cols["t"].extend([t] * r.size)
        cols["r"].extend(r)
        cols["v"].extend(traj.v[k])
    write_csv(_out(cfg, "trajectory.csv"), cols, {"dr": cfg["dr"], "kind": cfg["kind"], "p": cfg["p"]})
    checks = []
    if cfg["kind"] == "defocusing" and not traj.blowup:
        checks.append(_check("energy_drift", drift, 0.01, criterion=9))
    line = LineGrid(2 ** int(np.ceil(np.log2(4 * cfg["r_max"] / cfg["dr"]))), 2 * cfg["r_max"])
    out = {"energy_drift": drift, "blowup": traj.blowup, "blowup_time": traj.blowup_time,
           "times": traj.times, "energy": E}
    if not traj.blowup:
        G = extract_scattering_profile(traj, float(traj.times[-1]), line)
        out["profile_norm_sq_x2"] = 2.0 * hdot_norm_sq_cyl(G, 0.0)
    return _emit(cfg, "nl-sim", {**out, "checks": checks})


def cmd_embedding(cfg):
    p, beta = cfg["p"], cfg["beta"]
    if not 0.5 < beta < critical_exponent(p):
        beta = 0.7
    line = LineGrid(2 ** 16, 512.0)
    f = np.exp(-line.s() ** 2)
    lens = 2.0 ** np.arange(5)
    res = [embedding_check(line, f, 0.0, float(w), beta, p) for w in lens]
    ratio = np.array([r[2] for r in res])
    lhs = np.array([r[0] for r in res])
    slope = float(np.polyfit(np.log(lens), np.log(lhs), 1)[0])
    sp = critical_exponent(p)
    checks = [_check("ratio_max_over_min", ratio.max() / ratio.min(), 10.0),
              _check("lhs_slope", slope, sp - beta + 0.05)]
    write_csv(_out(cfg, "embedding.csv"), {"length": lens, "lhs": lhs, "rhs": [r[1] for r in res],
                                           "ratio": ratio})
    return _emit(cfg, "embedding-check", {"beta": beta, "ratio": ratio, "slope": slope, "checks": checks})


def cmd_report(cfg, check=False):
    d = Path(cfg["out"])
    d.mkdir(parents=True, exist_ok=True)
    per, sources = {}, {}
    for f in sorted(d.glob("*.json")):
        if f.name == "report.json":
            continue
        try:
            data = json.loads(f.read_text())
        except json.JSONDecodeError:
            continue
        for c in data.get("checks", []):
            key = str(c.get("criterion") or data.get("subcommand", f.stem))
            per.setdefault(key, []).append(c)
            sources.setdefault(key, set()).add(f.name)
    summary = {k: {"pass": all(c["pass"] for c in v), "checks": v, "sources": sorted(sources[k])}
               for k, v in per.items()}
    ok = all(v["pass"] for v in summary.values())
    write_json(d / "report.json", {"all_pass": ok, "criteria": summary})
    if check and not ok:
        return 3
    return 0


SUBCOMMANDS = {
    "forward": cmd_forward,
    "inverse": cmd_inverse,
    "evolve": cmd_evolve,
    "synthesize": cmd_synthesize,
    "isometry-check": cmd_isometry,
    "convergence-check": cmd_convergence,
    "l6-scan": cmd_l6,
    "y-scan": cmd_y,
    "s-scan": cmd_s_scan,
    "tail-scan": cmd_tail,
    "nl-sim": cmd_nl,
    "embedding-check": cmd_embedding,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="radfield", description="Radiation-field experiments.")
    ap.add_argument("subcommand", choices=[*SUBCOMMANDS, "report"])
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--check", action="store_true", help="report: exit 3 if any check fails")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"out": args.out, "seed": args.seed, "threads": args.threads})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _set_threads(cfg["threads"])
    if args.subcommand == "report":
        return cmd_report(cfg, args.check)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            SUBCOMMANDS[args.subcommand](cfg)
    except (ConfigError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical precondition failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
