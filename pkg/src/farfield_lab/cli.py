"""Batch experiment runner.

Usage::

    farfield-lab <subcommand> [--config path.json] [--set key.sub=value ...] [--output dir]

Every subcommand writes its data files plus ``manifest.json`` into the output
directory. Exit status: 0 on success, 2 when a checked tolerance fails, 1 on
any error (bad config, solver failure).
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analyticity import counterexample_report, fourier_decay, sample_torus, taylor_coefficients, taylor_evaluate
from .errors import FarFieldLabError
from .farfield import (
    NoSignal,
    factorization_residual,
    far_field_matrix,
    uniform_directions,
    DirectionSet,
)
from .forward import SolverConfig, solve_scattering
from .geometry import angle_to_direction, stereo_inverse
from .medium import RefractiveIndexField
from .oracle import mie_build, mie_far_field
from .serialize import load_medium, medium_from_dict, parse_complex, write_field_csv, write_json

logger = logging.getLogger("farfield_lab")

DEFAULTS: dict = {
    "medium": {"kind": "builtin", "params": {"name": "disc"}, "box": {"resolution": 96}},
    "k": 2.0,
    "N": 32,
    "theta": 0.0,
    "seed": 0,
    "solver": {"mode": "dense", "tolerance": 1e-10, "max_iterations": 3000},
    "params": {
        "n_random": 10,
        "factorization_tol": 1e-8,
        "reciprocity_tol": 1e-8,
        "decay_N": 64,
        "floor": 1e-13,
        "max_fit_residual": 1.0,
        "p": 8,
        "rho": 0.1,
        "x0_angle": 0.7,
        "theta0_angle": 3.9,
        "n_test": 20,
        "distance": 0.03,
        "taylor_tol": 1e-4,
        "t_min": 1e-6,
        "t_max": 1.0,
        "samples": 50,
        "restriction_tol": 1e-6,
        "min_fit_error": 0.4,
        "resolutions": [96],
        "oracle_tol": 5e-3,
        "min_ratio": 1.8,
    },
    "output": "out",
}


class ConfigError(FarFieldLabError, ValueError):
    pass


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def _set_dotted(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def load_config(path: str | None, sets: list[str] | None = None, output: str | None = None) -> dict:
    user: dict = {}
    if path:
        text = Path(path).read_text(encoding="utf-8")
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top-level JSON value must be an object")
        if isinstance(user.get("medium"), str):
            mpath = Path(user["medium"])
            if not mpath.is_absolute():
                mpath = Path(path).parent / mpath
            if not mpath.exists():
                raise ConfigError(f"field 'medium': file {mpath} does not exist")
            user["medium"] = str(mpath)
    cfg = _deep_merge(DEFAULTS, user)
    if isinstance(user.get("medium"), dict) and "kind" in user["medium"]:
        cfg["medium"] = user["medium"]
    for s in sets or []:
        _set_dotted(cfg, s)
    if output is not None:
        cfg["output"] = output
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    def need(cond, field, msg):
        if not cond:
            raise ConfigError(f"field '{field}': {msg}")

    need(isinstance(cfg["k"], (int, float)) and cfg["k"] > 0, "k", "must be a positive number")
    need(isinstance(cfg["N"], int) and cfg["N"] >= 2 and cfg["N"] % 2 == 0, "N", "must be an even integer >= 2")
    need(isinstance(cfg["seed"], int), "seed", "must be an integer")
    p = cfg["params"]
    need(isinstance(p["p"], int) and p["p"] >= 0, "params.p", "must be a non-negative integer")
    need(0 < p["rho"] <= 0.25, "params.rho", "must lie in (0, 0.25]")
    need(0 < p["distance"] <= p["rho"] / 2, "params.distance", "must lie in (0, rho/2]")
    need(isinstance(p["decay_N"], int) and p["decay_N"] >= 8 and p["decay_N"] % 2 == 0, "params.decay_N", "even, >= 8")
    need(0 < p["t_min"] < p["t_max"], "params.t_min", "need 0 < t_min < t_max")
    need(isinstance(p["resolutions"], list) and len(p["resolutions"]) > 0, "params.resolutions", "non-empty list")
    try:
        SolverConfig.from_dict(cfg["solver"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'solver': {exc}") from exc


def _medium(cfg: dict) -> RefractiveIndexField:
    try:
        return load_medium(cfg["medium"])
    except FarFieldLabError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"field 'medium': {exc}") from exc


def _solver(cfg: dict) -> SolverConfig:
    return SolverConfig.from_dict(cfg["solver"])


# each command returns (report, tolerances, passed)


def cmd_solve(cfg, out: Path):
    m = _medium(cfg)
    theta = angle_to_direction(float(cfg["theta"]))
    sol = solve_scattering(m, cfg["k"], theta, _solver(cfg))
    write_field_csv(out / "field.csv", m.grid, sol.total)
    write_field_csv(out / "scattered.csv", m.grid, sol.scattered)
    report = {"medium_hash": m.digest, "residual": sol.residual, "cells": m.grid.size}
    return report, {"solver": cfg["solver"]["tolerance"]}, True


def cmd_farfield(cfg, out: Path):
    m = _medium(cfg)
    dirs = uniform_directions(cfg["N"])
    samples = far_field_matrix(m, cfg["k"], dirs, dirs, _solver(cfg))
    samples.write(out / "farfield.csv", out / "farfield.json")
    return {"medium_hash": m.digest, "max_abs": float(np.abs(samples.U).max())}, {}, True


def cmd_check_factorization(cfg, out: Path):
    m = _medium(cfg)
    p = cfg["params"]
    dirs = uniform_directions(cfg["N"])
    rng = np.random.default_rng(cfg["seed"])
    residuals = []
    no_signal = False
    for _ in range(p["n_random"]):
        g = rng.standard_normal(cfg["N"]) + 1j * rng.standard_normal(cfg["N"])
        r = factorization_residual(m, cfg["k"], dirs, dirs, g, _solver(cfg))
        if isinstance(r, NoSignal):
            no_signal = True
            residuals.append(None)
        else:
            residuals.append(r)
    finite = [r for r in residuals if r is not None]
    worst = max(finite) if finite else None
    passed = no_signal or (worst is not None and worst < p["factorization_tol"])
    report = {"medium_hash": m.digest, "residuals": residuals, "max_residual": worst, "no_signal": no_signal}
    write_json(out / "factorization.json", report)
    return report, {"factorization_tol": p["factorization_tol"]}, passed


def reciprocity_residual(U: np.ndarray) -> float:
    """``max |U(x,t) - U(-t,-x)| / max |U|`` on an antipodally closed uniform grid."""
    N = U.shape[0]
    shift = (np.arange(N) + N // 2) % N
    swapped = U[np.ix_(shift, shift)].T
    scale = np.abs(U).max()
    return 0.0 if scale == 0 else float(np.abs(U - swapped).max() / scale)


def cmd_check_reciprocity(cfg, out: Path):
    m = _medium(cfg)
    p = cfg["params"]
    dirs = uniform_directions(cfg["N"])
    U = far_field_matrix(m, cfg["k"], dirs, dirs, _solver(cfg)).U
    res = reciprocity_residual(U)
    report = {"medium_hash": m.digest, "residual": res}
    write_json(out / "reciprocity.json", report)
    return report, {"reciprocity_tol": p["reciprocity_tol"]}, res < p["reciprocity_tol"]


def cmd_decay(cfg, out: Path):
    m = _medium(cfg)
    p = cfg["params"]
    s = sample_torus(m, cfg["k"], p["decay_N"], _solver(cfg))
    rep = fourier_decay(s, floor=p["floor"])
    rep.to_csv(out / "coefficients.csv")
    report = dict(rep.to_dict(), N=p["decay_N"], medium_hash=m.digest, coefficient_table="coefficients.csv")
    write_json(out / "decay.json", report)
    passed = rep.tau > 0 and rep.residual_log10 < p["max_fit_residual"]
    return report, {"max_fit_residual": p["max_fit_residual"], "floor": p["floor"]}, passed


def cmd_taylor(cfg, out: Path):
    m = _medium(cfg)
    p = cfg["params"]
    k = cfg["k"]
    solver = _solver(cfg)
    x0 = angle_to_direction(p["x0_angle"])
    t0 = angle_to_direction(p["theta0_angle"])
    model = taylor_coefficients(m, k, x0, t0, p["p"], p["rho"], cfg=solver)
    model.to_csv(out / "taylor_coefficients.csv")
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for _ in range(p["n_test"]):
        d = rng.standard_normal(2)
        d *= p["distance"] * np.sqrt(rng.uniform()) / np.linalg.norm(d)
        xh = stereo_inverse(model.z0 + d[0], model.cx)
        th = stereo_inverse(model.w0 + d[1], model.ctheta)
        direct = far_field_matrix(m, k, DirectionSet(xh[None], [1.0]), DirectionSet(th[None], [1.0]), solver).U[0, 0]
        approx = taylor_evaluate(model, xh, th)
        rel = abs(approx - direct) / abs(direct) if direct != 0 else abs(approx)
        rows.append({"dz": float(d[0]), "dw": float(d[1]), "direct": direct, "taylor": approx, "rel_error": rel})
    worst = max(r["rel_error"] for r in rows) if rows else 0.0
    report = {
        "medium_hash": m.digest,
        "charts": [model.cx.value, model.ctheta.value],
        "center": [model.z0, model.w0],
        "order": model.order,
        "rho": model.rho,
        "nodes": model.nodes,
        "max_rel_error": worst,
        "points": rows,
    }
    write_json(out / "taylor.json", report)
    return report, {"taylor_tol": p["taylor_tol"]}, worst < p["taylor_tol"]


def cmd_counterexample(cfg, out: Path):
    p = cfg["params"]
    rep = counterexample_report(p["t_min"], p["t_max"], p["samples"])
    write_json(out / "counterexample.json", rep)
    passed = (
        all(v == 0.5 for v in rep["diagonal"])
        and all(v == 0.0 for v in rep["axis"])
        and rep["origin_value"] == 0.0
        and max(rep["restriction_error_x"], rep["restriction_error_y"]) < p["restriction_tol"]
        and rep["min_bivariate_fit_error"] >= p["min_fit_error"]
    )
    tol = {"restriction_tol": p["restriction_tol"], "min_fit_error": p["min_fit_error"]}
    return rep, tol, passed


def cmd_oracle_compare(cfg, out: Path):
    desc = cfg["medium"]
    if isinstance(desc, str):
        desc = json.loads(Path(desc).read_text(encoding="utf-8"))
    if desc.get("kind") == "builtin" and desc.get("params", {}).get("name", "disc") == "disc":
        desc = {"kind": "disc", "box": {"half_width": 1.5}, "params": {"R": 1.0, "n0": 1.5}}
    if desc.get("kind") != "disc":
        raise ConfigError("field 'medium': oracle-compare needs a disc medium")
    params = desc.get("params", {})
    center = params.get("center", [0.0, 0.0])
    if any(c != 0 for c in center):
        raise ConfigError("field 'medium.params.center': oracle requires a disc centred at the origin")
    p = cfg["params"]
    k = cfg["k"]
    dirs = uniform_directions(cfg["N"])
    series = mie_build(float(params.get("R", 1.0)), parse_complex(params.get("n0", 1.5)), k)
    ref = mie_far_field(series, dirs.directions[:, None, :], dirs.directions[None, :, :])
    rows = []
    for res in p["resolutions"]:
        mdesc = copy.deepcopy(desc)
        mdesc.setdefault("box", {})["resolution"] = int(res)
        m = medium_from_dict(mdesc)
        solver = _solver(cfg)
        if m.grid.size > 128 * 128 and solver.mode == "dense":
            solver = SolverConfig("iterative", solver.tolerance, solver.max_iterations)
        U = far_field_matrix(m, k, dirs, dirs, solver).U
        err = float(np.linalg.norm(U - ref) / np.linalg.norm(ref))
        rows.append({"resolution": int(res), "h": float(m.grid.spacing[0]), "rel_error": err})
    for prev, cur in zip(rows, rows[1:]):
        cur["ratio"] = prev["rel_error"] / cur["rel_error"]
    series.to_csv(out / "mie_coefficients.csv")
    report = {"table": rows, "max_rel_error": rows[0]["rel_error"], "mie_order": series.order}
    write_json(out / "oracle_compare.json", report)
    passed = rows[0]["rel_error"] < p["oracle_tol"] and all(r.get("ratio", np.inf) >= p["min_ratio"] for r in rows)
    return report, {"oracle_tol": p["oracle_tol"], "min_ratio": p["min_ratio"]}, passed


COMMANDS = {
    "solve": cmd_solve,
    "farfield": cmd_farfield,
    "check-factorization": cmd_check_factorization,
    "check-reciprocity": cmd_check_reciprocity,
    "decay": cmd_decay,
    "taylor": cmd_taylor,
    "counterexample": cmd_counterexample,
    "oracle-compare": cmd_oracle_compare,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="farfield-lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON experiment configuration")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a dotted config key")
    ap.add_argument("--output", help="output directory (overrides config 'output')")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(command: str, cfg: dict) -> int:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    report, tolerances, passed = COMMANDS[command](cfg, out)
    runtime = time.perf_counter() - t0
    manifest = {
        "command": command,
        "config": cfg,
        "version": __version__,
        "runtime_seconds": runtime,
        "tolerances": tolerances,
        "passed": bool(passed),
        "outputs": sorted(p.name for p in out.iterdir() if p.name != "manifest.json"),
    }
    write_json(out / "manifest.json", manifest)
    if not passed:
        logger.error("%s: tolerance check failed; observed %s, required %s", command, _summary(report), tolerances)
        return 2
    logger.info("%s: ok (%s)", command, _summary(report))
    return 0


def _summary(report: dict) -> str:
    keys = ("residual", "max_residual", "max_rel_error", "tau", "residual_log10", "min_bivariate_fit_error")
    return ", ".join(f"{k}={report[k]}" for k in keys if k in report) or "see report"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.set, args.output)
        return run(args.command, cfg)
    except (FarFieldLabError, OSError, ValueError, KeyError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
