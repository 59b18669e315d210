"""Command-line entry point ``ocpstab``.

Subcommands and their outputs::

    solve-linear  CSV  t,v,lambda,u,v_exact,lambda_exact,u_exact,abs_err_v  + summary JSON
    stability     JSON stability report on stdout
    sweep         CSV  alpha,dt,class_numeric,class_analytic,osc_index,alpha_th  (dt-major)
    pendulum      CSV  t,x1,x2x,x2y,v2x,v2y,u,lambda_norm  + summary JSON

Exit codes: 0 success, 2 configuration or I/O error, 3 solver failure.
Errors are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .analytic import LinearOCPParams, derive_constants, eval_analytic
from .errors import BlowUpError, ConfigurationError, ContractViolation, ConvergenceError, SolverError
from .grid import Scheme, TimeGrid, grid_from_dt, make_grid
from .hbvp import NewtonSettings, newton_solve
from .linear import solve_bvp
from .pendulum import PendulumParams, pendulum_problem
from .stability import oscillation_index, phase_sweep, stability_report

EXIT_CONFIG = 2
EXIT_SOLVER = 3

_LINEAR_KEYS = {"m": "m", "b": "b", "a": "a", "v0": "v_o", "vt": "v_t", "T": "T", "alpha": "alpha"}
_PENDULUM_KEYS = {"m1": "m1", "m2": "m2", "k": "k", "a": "a", "x_target": "x_target", "T": "T",
                  "alpha": "alpha", "l0": "l_o"}


class _CLIError(Exception):
    def __init__(self, code, payload):
        super().__init__(payload.get("message", ""))
        self.code = code
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CLIError(EXIT_CONFIG, {"error": "ConfigurationError", "message": message})


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc.strerror}") from exc


def _write_json(path, obj):
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    try:
        Path(path).write_text(text, encoding="ascii")
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc.strerror}") from exc


def _jsonable(obj):
    # NaN and infinities are not valid JSON
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _read_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a JSON object")
    return cfg


def _number(cfg, key):
    val = cfg[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigurationError(f"config field {key!r} must be a number")
    return float(val)


def _split_config(cfg: dict, keys: dict, extra=()):
    unknown = set(cfg) - set(keys) - {"N", "dt"} - set(extra)
    if unknown:
        raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
    if ("N" in cfg) == ("dt" in cfg):
        raise ConfigurationError("config needs exactly one of 'N' or 'dt'")
    if "T" not in cfg:
        raise ConfigurationError("config needs 'T'")
    kwargs = {keys[k]: _number(cfg, k) for k in keys if k in cfg and cfg[k] is not None}
    T = kwargs["T"]
    if "N" in cfg:
        N = cfg["N"]
        if isinstance(N, bool) or not isinstance(N, int):
            raise ConfigurationError("'N' must be an integer")
        grid = make_grid(T, N)
    else:
        grid = grid_from_dt(T, _number(cfg, "dt"))
    return kwargs, grid


def linear_config(cfg: dict) -> tuple[LinearOCPParams, TimeGrid]:
    kwargs, grid = _split_config(cfg, _LINEAR_KEYS)
    return LinearOCPParams(**kwargs), grid


def pendulum_config(cfg: dict) -> tuple[PendulumParams, TimeGrid]:
    kwargs, grid = _split_config(cfg, _PENDULUM_KEYS)
    return PendulumParams(**kwargs), grid


def _linear_block(p: LinearOCPParams, grid: TimeGrid) -> dict:
    return {"m": p.m, "b": p.b, "a": p.a, "v0": p.v_o, "vt": p.v_t, "T": p.T, "alpha": p.alpha, "N": grid.N}


def _pendulum_block(p: PendulumParams, grid: TimeGrid) -> dict:
    return {"m1": p.m1, "m2": p.m2, "k": p.k, "a": p.a, "x_target": p.x_target, "T": p.T,
            "alpha": p.alpha, "l0": p.l_o, "N": grid.N}


def cmd_solve_linear(args) -> int:
    params, grid = linear_config(_read_config(args.config))
    scheme = Scheme.parse(args.scheme)
    tr = solve_bvp(params, grid, scheme)
    v_ex, lam_ex, u_ex = eval_analytic(derive_constants(params), params, grid.times)
    err_v = np.abs(tr.v - v_ex)
    _write_csv(args.out, ["t", "v", "lambda", "u", "v_exact", "lambda_exact", "u_exact", "abs_err_v"],
               zip(grid.times, tr.v, tr.lam, tr.u, v_ex, lam_ex, u_ex, err_v))
    summary = {
        "scheme": scheme.name,
        "config": _linear_block(params, grid),
        "dt": grid.dt,
        "max_abs_err": {"v": float(err_v.max()), "lambda": float(np.abs(tr.lam - lam_ex).max()),
                        "u": float(np.abs(tr.u - u_ex).max())},
        "oscillation_index": oscillation_index(tr.u),
        "stability": stability_report(params, grid.dt, scheme).to_dict(),
    }
    _write_json(args.summary, summary)
    return 0


def cmd_stability(args) -> int:
    params = LinearOCPParams(m=args.m, b=args.b, alpha=args.alpha)
    if not (math.isfinite(args.dt) and args.dt > 0):
        raise ConfigurationError("dt must be positive")
    report = stability_report(params, args.dt, args.scheme, boundary_rtol=args.boundary_rtol)
    sys.stdout.write(json.dumps(_jsonable(report.to_dict()), sort_keys=True) + "\n")
    return 0


def cmd_sweep(args) -> int:
    params = linear_config(_read_config(args.config))[0] if args.config else LinearOCPParams()
    for lo, hi, name in ((args.alpha_min, args.alpha_max, "alpha"), (args.dt_min, args.dt_max, "dt")):
        if not (0 < lo < hi):
            raise ConfigurationError(f"need 0 < {name}-min < {name}-max")
    if args.n < 2:
        raise ConfigurationError("--n must be at least 2")
    if args.jobs is not None and args.jobs < 1:
        raise ConfigurationError("--jobs must be positive")
    alphas = np.logspace(math.log10(args.alpha_min), math.log10(args.alpha_max), args.n)
    dts = np.logspace(math.log10(args.dt_min), math.log10(args.dt_max), args.n)
    schemes = ["mp", "ie"] if args.scheme == "both" else [args.scheme]
    out = Path(args.out)
    diagrams = [phase_sweep(params, alphas, dts, s, jobs=args.jobs, index_threshold=args.index_threshold)
                for s in schemes]
    for s, d in zip(schemes, diagrams):
        path = out if len(schemes) == 1 else out.with_name(f"{out.stem}_{s}{out.suffix}")
        _write_csv(path, ["alpha", "dt", "class_numeric", "class_analytic", "osc_index", "alpha_th"], d.rows())
    return 0


def cmd_pendulum(args) -> int:
    cfg = _read_config(args.config)
    if args.alpha is not None:
        cfg = {**cfg, "alpha": args.alpha}
    params, grid = pendulum_config(cfg)
    problem = pendulum_problem(params)
    settings = NewtonSettings(tol=args.tol, max_iter=args.max_iter, continuation=args.continuation)
    tr = newton_solve(problem, grid, args.scheme, settings)
    lam_norm = np.linalg.norm(tr.lam, axis=1)
    _write_csv(args.out, ["t", "x1", "x2x", "x2y", "v2x", "v2y", "u", "lambda_norm"],
               (row for row in np.column_stack([grid.times, tr.x, tr.u[:, 0], lam_norm])))
    summary = {
        "scheme": Scheme.parse(args.scheme).name,
        "config": _pendulum_block(params, grid),
        "dt": grid.dt,
        "iterations": tr.info["iterations"],
        "residual": tr.info["residual"],
        "residual_history": tr.info["history"],
        "continuation_alphas": tr.info["alphas"],
        "oscillation_index": oscillation_index(tr.u[:, 0]),
    }
    _write_json(args.summary, summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ocpstab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve-linear", help="solve the scalar problem and compare with the closed form")
    s.add_argument("--config", required=True, help='JSON {"m","b","a","v0","vt","T","alpha", "N" or "dt"}')
    s.add_argument("--scheme", choices=["mp", "ie"], default="mp")
    s.add_argument("--out", required=True)
    s.add_argument("--summary", required=True)
    s.set_defaults(func=cmd_solve_linear)

    s = sub.add_parser("stability", help="eigenvalue report for one (alpha, dt) point")
    for name, default in (("--m", 1.0), ("--b", 1.0)):
        s.add_argument(name, type=float, default=default)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--dt", type=float, required=True)
    s.add_argument("--scheme", choices=["mp", "ie"], default="mp")
    s.add_argument("--boundary-rtol", type=float, default=1e-4,
                   help="relative distance to the threshold reported as Boundary (default 1e-4)")
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("sweep", help="numerical and analytic classification over a log-spaced grid")
    s.add_argument("--scheme", choices=["mp", "ie", "both"], default="mp",
                   help="'both' writes <out>_mp and <out>_ie")
    s.add_argument("--alpha-min", type=float, default=1e-5)
    s.add_argument("--alpha-max", type=float, default=1.0)
    s.add_argument("--dt-min", type=float, default=1e-2)
    s.add_argument("--dt-max", type=float, default=1.0)
    s.add_argument("--n", type=int, default=64, help="points per axis")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (default: all CPUs)")
    s.add_argument("--index-threshold", type=float, default=None,
                   help="classify by oscillation-index fraction instead of alternation count")
    s.add_argument("--config", default=None, help="linear JSON config for m, b, a, v0, vt, T")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("pendulum", help="solve the elastic pendulum problem by Newton's method")
    s.add_argument("--config", required=True,
                   help='JSON {"m1","m2","k","a","x_target","T","alpha","l0"?, "N" or "dt"}')
    s.add_argument("--alpha", type=float, default=None, help="overrides the config value")
    s.add_argument("--scheme", default="mp", help="mp, ie or a tau value in [0, 0.5]")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--continuation", action="store_true",
                   help="on failure retry with alpha continuation from a forward-simulated guess")
    s.add_argument("--out", required=True)
    s.add_argument("--summary", required=True)
    s.set_defaults(func=cmd_pendulum)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
        return args.func(args)
    except _CLIError as exc:
        err = exc
    except (ConfigurationError, ContractViolation) as exc:
        err = _CLIError(EXIT_CONFIG, {"error": type(exc).__name__, "message": str(exc)})
    except ConvergenceError as exc:
        err = _CLIError(EXIT_SOLVER, {"error": type(exc).__name__, "message": str(exc),
                                      "residual_history": list(exc.history)})
    except (SolverError, BlowUpError) as exc:
        err = _CLIError(EXIT_SOLVER, {"error": type(exc).__name__, "message": str(exc)})
    sys.stderr.write(json.dumps(_jsonable(err.payload), sort_keys=True) + "\n")
    return err.code


if __name__ == "__main__":
    sys.exit(main())
