"""Command-line front end: ``tfalg <command> ...``.

Every command prints one JSON document (sorted keys) to stdout or ``--out``.
Exit codes: 0 success, 1 tolerance not reached, 2 input/parse error,
3 precondition or verification failure, 4 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .channel import gaussian_signal, off_identity_ratio, random_channel
from .core import TFOperator, Weight, norm_av
from .invert import neumann_invert_contraction, neumann_invert_symmetric
from .exceptions import (
    ConvergenceError,
    DimensionMismatchError,
    GridError,
    NotContractiveError,
    ResourceLimitError,
)
from .oracle import Grid, apply_operator, frame_bounds_estimate, write_gridfunction

EXIT_OK, EXIT_TOL, EXIT_PARSE, EXIT_PRECONDITION, EXIT_RESOURCE = 0, 1, 2, 3, 4

# per-command defaults; a --config file and then explicit flags override them
DEFAULTS = {
    "common": {"seed": 0, "n_samples": None, "L": 8.0},
    "invert": {"mode": "auto", "weight": "constant", "tol": 1e-6, "max_iter": 2000,
               "truncation_budget": None, "a": None, "b": None},
    "trace": {"alpha": 0.5, "beta": 0.5, "M": 32, "N": None, "width": 1.0, "tight": False},
    "equalize": {"tol": 1e-6, "max_iter": 2000, "random": None, "channel_file": None,
                 "signal_width": 1.0, "t_max": 2.0, "omega_max": 4.0, "margin": 0.8},
    "spectrum": {"weight": "constant", "n_max": 20},
    "decay": {"a": None, "b": None, "r0": None, "radii": None, "operator": None},
    "window": {"tol": 1e-5},
}


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with parameters (flags take precedence)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-samples", dest="n_samples", type=int, help="grid points per axis")
    p.add_argument("--L", dest="L", type=float, help="grid half length")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfalg", description="time-frequency shift operator algebra")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invert", help="Neumann-series inverse of an operator file")
    p.add_argument("operator_file")
    p.add_argument("--mode", choices=["auto", "contraction", "symmetric"])
    p.add_argument("--weight")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--truncation-budget", dest="truncation_budget", type=float)
    p.add_argument("--a", type=float, help="lower bound A <= T*T")
    p.add_argument("--b", type=float, help="upper bound T*T <= B")
    p.add_argument("--inverse-out", dest="inverse_out", help="write the inverse operator file here")
    _add_common(p)

    p = sub.add_parser("trace", help="Gabor-frame trace estimate")
    p.add_argument("operator_file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--M", dest="M", type=int)
    p.add_argument("--N", dest="N", type=int)
    p.add_argument("--width", type=float)
    p.add_argument("--tight", action="store_true", default=None)
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", metavar="X",
                   help="recover the coefficient at (t..., omega...)")
    _add_common(p)

    p = sub.add_parser("equalize", help="multipath channel equalization demo")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--channel-file", dest="channel_file")
    src.add_argument("--random", type=int, nargs="+", metavar="K [SEED]",
                     help="random channel with K scattered paths")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--signal-width", dest="signal_width", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--omega-max", dest="omega_max", type=float)
    p.add_argument("--margin", type=float)
    _add_common(p)

    p = sub.add_parser("spectrum", help="Gelfand spectral radius estimates")
    p.add_argument("operator_file")
    p.add_argument("--weight")
    p.add_argument("--n-max", dest="n_max", type=int)
    _add_common(p)

    p = sub.add_parser("decay", help="exponential decay certificate for inverse coefficients")
    p.add_argument("inverse_file")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--r0", type=float, help="support radius of 1 - 2/(A+B) T*T")
    p.add_argument("--radii", type=float, nargs="+")
    p.add_argument("--operator", help="original operator file; supplies r0 when omitted")
    _add_common(p)

    p = sub.add_parser("window", help="window with orthonormal shifts over a point set")
    p.add_argument("sigma_file")
    p.add_argument("--tol", type=float)
    p.add_argument("--window-out", dest="window_out", help="write the window in GridFunction format")
    _add_common(p)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags into one parameter record."""
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS.get(args.command, {}))
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise io.FormatError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise io.FormatError("config file must hold a JSON object")
        for key, val in data.items():
            cfg[key.replace("-", "_")] = val
    for key, val in vars(args).items():
        if val is not None and key != "config":
            cfg[key] = val
    try:
        _validate(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad parameter value: {exc}") from exc
    return cfg


def _validate(cfg: dict):
    positive = ["tol", "alpha", "beta", "width", "L", "signal_width", "t_max", "omega_max"]
    for key in positive:
        if key in cfg and cfg[key] is not None and not float(cfg[key]) > 0:
            raise UsageError(f"{key} must be positive")
    for key in ("max_iter", "n_max", "M"):
        if cfg.get(key) is not None and int(cfg[key]) < 1:
            raise UsageError(f"{key} must be >= 1")
    if cfg.get("N") is not None and int(cfg["N"]) < 0:
        raise UsageError("N must be >= 0")
    if cfg.get("margin") is not None and not 0 <= float(cfg["margin"]) < 1:
        raise UsageError("margin must lie in [0, 1)")
    if cfg.get("weight") is not None:
        try:
            Weight.parse(cfg["weight"])
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


def _grid(cfg: dict, d: int, default_n: int | None = None) -> Grid:
    n = cfg.get("n_samples") or default_n or Grid.default(d).n_samples
    return Grid(d, int(n), float(cfg["L"]))


def _weight(cfg: dict) -> Weight:
    return Weight.parse(cfg.get("weight") or "constant")


# -- commands --------------------------------------------------------------------

def _invert(t: TFOperator, cfg: dict):
    v = _weight(cfg)
    mode = cfg["mode"]
    kwargs = dict(tol=float(cfg["tol"]), max_iter=int(cfg["max_iter"]),
                  truncation_budget=cfg.get("truncation_budget"))
    notes = {}
    if mode in ("auto", "contraction"):
        try:
            return neumann_invert_contraction(t, v, **kwargs), notes
        except NotContractiveError as exc:
            if mode == "contraction":
                raise
            notes["contraction_skipped"] = str(exc)
    a, b = cfg.get("a"), cfg.get("b")
    if a is None or b is None:
        grid = _grid(cfg, t.dim)
        a_est, b_est = frame_bounds_estimate(t, grid)
        notes["bounds_from_grid"] = grid.to_dict()
        a = a_est if a is None else a
        b = b_est if b is None else b
        if not a > 0:
            raise NotContractiveError(f"operator is numerically singular on the grid (A estimate {a:.3e})")
    return neumann_invert_symmetric(t, v, float(a), float(b), **kwargs), notes


def cmd_invert(cfg: dict) -> tuple[dict, int]:
    t = io.read_operator(cfg["operator_file"])
    try:
        rep, notes = _invert(t, cfg)
        code = EXIT_OK
    except ConvergenceError as exc:
        if exc.report is None:
            raise
        rep, notes, code = exc.report, {"error": str(exc)}, EXIT_TOL
    if cfg.get("inverse_out"):
        io.write_operator(cfg["inverse_out"], rep.inverse)
    out = rep.to_dict()
    out.update(notes)
    out["weight"] = cfg["weight"]
    out["tol"] = cfg["tol"]
    out["converged"] = rep.residual_av <= cfg["tol"]
    if code == EXIT_OK and not out["converged"]:
        code = EXIT_TOL
    return out, code


def cmd_trace(cfg: dict) -> tuple[dict, int]:
    from .gabor import build_gabor, recover_coefficient, trace_estimate

    t = io.read_operator(cfg["operator_file"])
    grid = _grid(cfg, t.dim)
    sys_ = build_gabor(grid, float(cfg["alpha"]), float(cfg["beta"]), width=float(cfg["width"]),
                       tight=bool(cfg["tight"]))
    m = int(cfg["M"])
    n = m if cfg.get("N") is None else int(cfg["N"])
    out = trace_estimate(t, sys_, m, n).to_dict()
    out["alpha"], out["beta"] = sys_.alpha, sys_.beta
    out["reproduction_error"] = sys_.reproduction_error
    if cfg.get("lam") is not None:
        lam = [float(x) for x in cfg["lam"]]
        if len(lam) != 2 * t.dim:
            raise UsageError(f"--lambda needs {2 * t.dim} numbers")
        c = recover_coefficient(t, lam, sys_, m, n)
        out["lambda"] = lam
        out["coefficient"] = [c.real, c.imag]
    return out, EXIT_OK


def _tol_ladder(tol: float) -> list:
    levels, x = [], 1e-1
    while x > tol * (1 + 1e-9):
        levels.append(x)
        x /= 10.0
    return levels + [tol]


def cmd_equalize(cfg: dict) -> tuple[dict, int]:
    if cfg.get("channel_file"):
        t = io.read_operator(cfg["channel_file"])
        source = {"channel_file": cfg["channel_file"]}
        grid = _grid(cfg, t.dim)
    else:
        rnd = cfg.get("random") or [5]
        if isinstance(rnd, int):
            rnd = [rnd]
        k = int(rnd[0])
        seed = int(rnd[1]) if len(rnd) > 1 else int(cfg["seed"])
        cfg["seed"] = seed
        grid = _grid(cfg, 1)
        t = random_channel(k, seed, grid.d, float(cfg["margin"]), float(cfg["t_max"]),
                           float(cfg["omega_max"]), grid)
        source = {"random_paths": k}
    if t.dim != grid.d:
        raise DimensionMismatchError("channel and grid dimensions differ")
    signal = gaussian_signal(grid, float(cfg["signal_width"]))
    received = apply_operator(t, signal)
    tol = float(cfg["tol"])
    curve, final, code = [], None, EXIT_OK
    for level in _tol_ladder(tol):
        try:
            rep = neumann_invert_contraction(t, None, tol=level, max_iter=int(cfg["max_iter"]))
        except ConvergenceError as exc:
            if exc.report is None:
                raise
            rep, code = exc.report, EXIT_TOL
        eq = apply_operator(rep.inverse, received)
        diff = eq.values - signal.values
        err = math.sqrt(grid.h ** grid.d * float(np.vdot(diff, diff).real)) / signal.norm()
        curve.append({"tol": level, "iterations": rep.iterations, "terms": len(rep.inverse),
                      "residual_av": rep.residual_av, "error": err})
        final = rep
    out = {
        "channel": io.operator_to_dict(t),
        "off_identity_ratio": off_identity_ratio(t),
        "grid": grid.to_dict(),
        "error": curve[-1]["error"],
        "residual_av": final.residual_av,
        "iterations": final.iterations,
        "curve": curve,
    }
    out.update(source)
    if code == EXIT_OK and final.residual_av > tol:
        code = EXIT_TOL
    return out, code


def cmd_spectrum(cfg: dict) -> tuple[dict, int]:
    from .invert import spectral_radius_gelfand

    t = io.read_operator(cfg["operator_file"])
    v = _weight(cfg)
    est = spectral_radius_gelfand(t, v, int(cfg["n_max"]))
    return {
        "weight": cfg["weight"],
        "admissible": v.admissible,
        "estimates": est.estimates,
        "unweighted": est.unweighted,
        "extrapolated": est.extrapolated,
        "norm_av": norm_av(t, v),
    }, EXIT_OK


def cmd_decay(cfg: dict) -> tuple[dict, int]:
    from .invert import certify_decay, residual_radius

    inv = io.read_operator(cfg["inverse_file"])
    a, b = cfg.get("a"), cfg.get("b")
    if a is None or b is None:
        raise UsageError("decay needs --a and --b")
    r0 = cfg.get("r0")
    if r0 is None:
        if not cfg.get("operator"):
            raise UsageError("decay needs --r0 or --operator")
        r0 = residual_radius(io.read_operator(cfg["operator"]), float(a), float(b))
    radii = cfg.get("radii")
    if radii is None:
        top = max(float(np.linalg.norm(inv.points, axis=1).max()) if len(inv) else 1.0, 1.0)
        radii = list(np.linspace(0.0, top, 9)[1:])
    cert = certify_decay(inv, float(a), float(b), float(r0), radii)
    out = cert.to_dict()
    out["r0"] = float(r0)
    slope_ok = cert.empirical_rate >= cert.delta - 0.05 if math.isfinite(cert.empirical_rate) else True
    out["slope_within_certificate"] = bool(slope_ok)
    return out, EXIT_OK if cert.certified and slope_ok else EXIT_PRECONDITION


def cmd_window(cfg: dict) -> tuple[dict, int]:
    from .window import fourier_zero_residuals, plan_window, realize_window, required_half_length, \
        verify_orthonormal

    sigma = io.read_points(cfg["sigma_file"])
    if not sigma:
        raise io.FormatError("point file is empty")
    d = sigma[0].dim
    n = int(cfg.get("n_samples") or 1024)
    user_l = bool(cfg.get("_L_given"))
    length = float(cfg["L"])
    for _ in range(40):
        grid = Grid(d, n, length, cap=max(n ** d, 4096))
        plan = plan_window(sigma, time_step=grid.h)
        need = required_half_length(plan)
        if need < length or user_l:
            break
        length *= 2.0
    g = realize_window(plan, grid)
    rep = verify_orthonormal(g, sigma, float(cfg["tol"]))
    if cfg.get("window_out"):
        write_gridfunction(cfg["window_out"], g)
    out = {
        "plan": plan.to_dict(),
        "grid": grid.to_dict(),
        "gram": rep.to_dict(),
        "fourier_zero": fourier_zero_residuals(plan, grid),
    }
    return out, EXIT_OK if rep.passed else EXIT_PRECONDITION


COMMANDS = {
    "invert": cmd_invert,
    "trace": cmd_trace,
    "equalize": cmd_equalize,
    "spectrum": cmd_spectrum,
    "decay": cmd_decay,
    "window": cmd_window,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        cfg["_L_given"] = args.L is not None
        out, code = COMMANDS[args.command](cfg)
    except (io.FormatError, UsageError) as exc:
        print(f"tfalg: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ResourceLimitError as exc:
        print(f"tfalg: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NotContractiveError, GridError, DimensionMismatchError, ValueError) as exc:
        print(f"tfalg: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    out["command"] = args.command
    out["seed"] = cfg["seed"]
    text = io.dumps(_jsonable(out)) + "\n"
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
