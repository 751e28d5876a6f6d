"""Command-line interface: `rumorlab <subcommand> [options]`.

Exit codes: 0 success, 1 invalid input, 2 solver non-convergence,
3 disagreement between independent computations.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import export
from .abm import run_abm
from .closed_forms import classify_and_solve, threshold_distance
from .dynamics import DEFAULT_SEED, DivergenceError, PartisanState, integrate, integrate_partisan
from .equilibrium import (NoEquilibriumError, solve_equilibrium, solve_equilibrium_grid,
                          solve_partisan_equilibrium)
from .model import ModelParams, load_config, params_from_mapping
from .steady import stability_classify, steady_prevalence

log = logging.getLogger("rumorlab")

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_DISAGREE = 0, 1, 2, 3
RESIDUAL_LIMIT = 1e-8
AGREEMENT_MIN = 0.99


class Disagreement(RuntimeError):
    pass


class NotConverged(RuntimeError):
    pass


# -- argument handling ---------------------------------------------------------

def _parse_values(spec: str) -> list[float]:
    """'a:b:n' for n evenly spaced values, otherwise a comma-separated list."""
    if ":" in spec:
        lo, hi, n = spec.split(":")
        if int(n) < 2:
            raise ValueError("grid resolution must be >= 2")
        return list(np.linspace(float(lo), float(hi), int(n)))
    return [float(v) for v in spec.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("model")
    g.add_argument("--config", help="key = value file (or CSV, first row) with defaults")
    for f in fields(ModelParams):
        g.add_argument(f"--{f.name}", type=int if f.name == "k" else float, default=None)
    g.add_argument("--xbar", type=float, default=None, help="verification cap (1 = no cap)")
    g.add_argument("--fn", default=None, help="verification family (exp_cap)")
    p.add_argument("-o", "--out", default=None, help="output CSV (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def _model(args):
    base = {}
    if args.config:
        path = Path(args.config)
        if path.suffix == ".csv":
            rows = export.read_csv(path)
            if not rows:
                raise ValueError(f"{path}: no rows")
            base = rows[0]
        else:
            base = load_config(path)
    merged = dict(base)
    for key in [f.name for f in fields(ModelParams)] + ["xbar", "fn"]:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    params, fn = params_from_mapping(merged)
    for w in params.warnings():
        log.warning(w)
    return params, fn, merged


def _emit(rows, columns, out):
    if out:
        export.write_csv(rows, columns, out)
    else:
        export.write_csv(rows, columns, sys.stdout)


def _rates(args, params, fn, merged):
    l = args.l if args.l is not None else merged.get("l")
    h = args.h if args.h is not None else merged.get("h")
    if args.equilibrium or l is None or h is None:
        sol = solve_equilibrium(params, fn)
        return sol.l, sol.h
    return float(l), float(h)


def _check_residual(res):
    if res > RESIDUAL_LIMIT:
        raise NotConverged(f"fixed-point residual {res:.3g} above {RESIDUAL_LIMIT}")


# -- subcommands ---------------------------------------------------------------

def cmd_steady(args):
    params, fn, merged = _model(args)
    l, h = _rates(args, params, fn, merged)
    ss = steady_prevalence(l, h, params)
    rep = stability_classify(params, l, h)
    if not rep.agrees:
        raise Disagreement(f"eigenvalue signs disagree with the lambda*k rule: {rep}")
    _emit([dict(k=params.k, nu=params.nu, delta=params.delta, beta=params.beta, lam=params.lam,
                l=l, h=h, iota=ss.iota, rho0=ss.rho0, rho1=ss.rho1, ttr=ss.ttr,
                stability=rep.label)], export.STEADY_COLUMNS, args.out)


def cmd_equilibrium(args):
    params, fn, _ = _model(args)
    sol = solve_equilibrium(params, fn)
    _check_residual(sol.residual)
    if args.all:
        from .equilibrium import all_equilibria
        sols = all_equilibria(params, fn)
    else:
        sols = [sol]
    _emit([export.solution_row(s, params, fn.x_bar) for s in sols],
          export.SOLUTION_COLUMNS, args.out)
    if not sol.cond_y_ok:
        log.warning("prior condition fails at the equilibrium (cond_y_ok=false)")


def cmd_trajectory(args):
    params, fn, merged = _model(args)
    l, h = _rates(args, params, fn, merged)
    if params.gamma > 0:
        s0 = PartisanState(DEFAULT_SEED.rho00, DEFAULT_SEED.rho01 + DEFAULT_SEED.rho11,
                           DEFAULT_SEED.rho01, DEFAULT_SEED.rho11)
        traj = integrate_partisan(s0, params, l, h, horizon=args.horizon, dt=args.dt,
                                  record_every=args.record_every)
    else:
        traj = integrate(DEFAULT_SEED, params, l, h, horizon=args.horizon, dt=args.dt,
                         record_every=args.record_every)
    _emit(export.trajectory_rows(traj), export.TRAJECTORY_COLUMNS, args.out)
    if not traj.converged:
        log.info("horizon reached before the derivative tolerance")


def cmd_abm(args):
    params, fn, merged = _model(args)
    l, h = _rates(args, params, fn, merged)
    seeds = [int(s) for s in args.seeds.split(",")]
    res = run_abm(params, l, h, N=args.N, dt=args.dt, horizon=args.horizon, seeds=seeds,
                  record_every=args.record_every, workers=args.workers)
    rows = ((t, r.rho0[i], r.rho1[i], r.iota[i], r.seed)
            for r in res.runs for i, t in enumerate(r.t))
    _emit(rows, export.ABM_COLUMNS, args.out)
    if args.summary:
        cols = [res.mean("rho0"), res.std("rho0"), res.mean("rho1"), res.std("rho1"),
                res.mean("iota"), res.std("iota")]
        export.write_csv(([t, *(c[i] for c in cols), len(seeds)] for i, t in enumerate(res.t)),
                         export.ABM_SUMMARY_COLUMNS, args.summary)


def solver_case(l, h, valid, x_bar, eps=1e-9):
    """Case label I..VI (or Invalid) implied by solved rates."""
    if not valid:
        return "Invalid"
    cap = min(x_bar, 1 - 1e-9)
    lo_l, lo_h = l <= eps, h <= eps
    at_cap_l, at_cap_h = l >= cap - eps, h >= cap - eps
    if lo_l and lo_h:
        return "I"
    if lo_l:
        return "III" if at_cap_h else "II"
    if at_cap_h:
        return "VI" if at_cap_l else "V"
    return "IV"


def _grid_chunk(job):
    c, y, beta, x_bar = job
    from .model import make_exponential_capped
    g = solve_equilibrium_grid(c, y, beta, make_exponential_capped(x_bar))
    return g.l, g.h, g.cond_y_ok, g.residual


def region_map(c_vals, y_vals, beta, x_bar, workers=1):
    """Closed-form and solver classification on the (c, y) grid, row-major in y."""
    yy, cc = np.meshgrid(y_vals, c_vals, indexing="ij")
    c_flat, y_flat = cc.ravel(), yy.ravel()
    parts = np.array_split(np.arange(c_flat.size), max(1, workers))
    jobs = [(c_flat[p], y_flat[p], beta, x_bar) for p in parts if p.size]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_grid_chunk, jobs))
    else:
        out = [_grid_chunk(j) for j in jobs]
    sl, sh, ok, res = (np.concatenate(col) for col in zip(*out))
    rows = []
    for i, (c, y) in enumerate(zip(c_flat, y_flat)):
        rc = classify_and_solve(c, y, beta, x_bar)
        scase = solver_case(sl[i], sh[i], ok[i], x_bar)
        boundary = threshold_distance(c, y, beta, x_bar) < 1e-3
        same_case = scase in rc.case.split("|")
        close = max(abs(sl[i] - rc.l), abs(sh[i] - rc.h)) <= 1e-6
        rows.append(dict(c=c, y=y, beta=beta, xbar=x_bar, case=rc.case, l=rc.l, h=rc.h,
                         ttr=rc.ttr, solver_case=scase, solver_l=sl[i], solver_h=sh[i],
                         boundary=boundary,
                         agree=same_case and (close or not rc.valid)))
    return rows, float(res.max())


def cmd_region_map(args):
    params, fn, _ = _model(args)
    if fn.name != "exp_cap":
        raise ValueError("region-map requires the exp_cap verification family")
    c_vals = _interior(args.c_range, args.nc)
    y_vals = _interior(args.y_range, args.ny)
    rows, worst = region_map(c_vals, y_vals, params.beta, fn.x_bar, args.workers)
    _emit(rows, export.REGION_COLUMNS, args.out)
    if args.ppm:
        export.write_ppm(np.array([r["case"] for r in rows]).reshape(len(y_vals), len(c_vals)),
                         args.ppm)
    _check_residual(worst)
    inner = [r for r in rows if not r["boundary"]]
    if inner:
        frac = sum(not r["agree"] for r in inner) / len(inner)
        log.info("disagreement on %.3g%% of %d non-boundary cells", 100 * frac, len(inner))
        if frac > 1 - AGREEMENT_MIN:
            raise Disagreement(f"closed forms and solver disagree on {100 * frac:.2f}% of cells")


def _interior(rng, n):
    """n points strictly inside (lo, hi); both end points when n == 2 would be degenerate."""
    lo, hi = rng
    if n < 2:
        raise ValueError("grid resolution must be >= 2")
    return lo + (hi - lo) * (np.arange(n) + 1) / (n + 1)


def _solve_row(params, fn, merged):
    row = {"lam": params.lam, "k": params.k, "nu": params.nu, "delta": params.delta}
    try:
        pe = solve_partisan_equilibrium(params, fn)
        _check_residual(pe.baseline.residual)
        row.update(export.solution_row(pe.baseline, params, fn.x_bar))
        row.update(l=pe.l, h=pe.h, ttr=pe.ttr)
        if pe.cap_violation:
            row["error"] = "cap_violation"
    except (ValueError, NoEquilibriumError, NotConverged) as exc:
        row.update(y=params.y, c=params.c, beta=params.beta, gamma=params.gamma,
                   xbar=fn.x_bar, error=f"{type(exc).__name__}: {exc}")
    return row


def cmd_sweep(args):
    if not 1 <= len(args.sweep) <= 2:
        raise ValueError("sweep takes one or two --sweep NAME=VALUES arguments")
    params, fn, merged = _model(args)
    axes = []
    for spec in args.sweep:
        name, _, values = spec.partition("=")
        name = name.strip()
        if name not in {f.name for f in fields(ModelParams)} | {"xbar"}:
            raise ValueError(f"cannot sweep {name!r}")
        axes.append((name, _parse_values(values)))
    rows = []
    for combo in itertools.product(*(v for _, v in axes)):
        m = dict(merged)
        m.update({name: v for (name, _), v in zip(axes, combo)})
        try:
            p, f = params_from_mapping(m)
        except ValueError as exc:
            rows.append({**m, "error": f"ValueError: {exc}"})
            continue
        rows.append(_solve_row(p, f, m))
    _emit(rows, export.SWEEP_COLUMNS, args.out)


def cmd_partisan_check(args):
    params, fn, _ = _model(args)
    rows, ttrs = [], []
    for g in _parse_values(args.gammas):
        pe = solve_partisan_equilibrium(params.with_(gamma=g), fn)
        _check_residual(pe.baseline.residual)
        rows.append(dict(gamma=g, l=pe.l, h=pe.h, l_eff=pe.l_eff, h_eff=pe.h_eff,
                         rho0=pe.rho0, rho1=pe.rho1, ttr=pe.ttr,
                         cap_violation=pe.cap_violation))
        if not pe.cap_violation:
            ttrs.append(pe.ttr)
    _emit(rows, export.PARTISAN_COLUMNS, args.out)
    if ttrs and max(ttrs) - min(ttrs) > 1e-8:
        raise Disagreement(f"ratio varies with gamma: spread {max(ttrs) - min(ttrs):.3g}")


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rumorlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.set_defaults(func=func)
        return p

    def rate_args(p):
        p.add_argument("--l", type=float, default=None, help="own-bias verification rate")
        p.add_argument("--h", type=float, default=None, help="opposing verification rate")
        p.add_argument("--equilibrium", action="store_true",
                       help="use equilibrium rates (default when --l/--h are missing)")

    p = add("steady", cmd_steady, "closed-form steady state and stability")
    rate_args(p)
    p = add("equilibrium", cmd_equilibrium, "solve for equilibrium verification rates")
    p.add_argument("--all", action="store_true", help="one row per fixed point")
    p = add("trajectory", cmd_trajectory, "integrate the laws of motion")
    rate_args(p)
    p.add_argument("--horizon", type=float, default=2000.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--record-every", type=int, default=10)
    p = add("abm", cmd_abm, "agent-based simulation")
    rate_args(p)
    p.add_argument("--N", type=int, default=20_000)
    p.add_argument("--dt", type=float, default=0.25)
    p.add_argument("--horizon", type=float, default=400.0)
    p.add_argument("--seeds", default="0")
    p.add_argument("--record-every", type=int, default=4)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--summary", default=None, help="across-seed mean/std CSV")
    p = add("region-map", cmd_region_map, "case map on a (c, y) grid")
    p.add_argument("--c-range", type=float, nargs=2, default=(0.0, 0.5))
    p.add_argument("--y-range", type=float, nargs=2, default=(0.5, 0.995))
    p.add_argument("--nc", type=int, default=100)
    p.add_argument("--ny", type=int, default=100)
    p.add_argument("--ppm", default=None, help="write a P6 heatmap here")
    p.add_argument("--workers", type=int, default=1)
    p = add("sweep", cmd_sweep, "equilibria over one or two parameters")
    p.add_argument("--sweep", action="append", default=[], metavar="NAME=VALUES",
                   help="values as lo:hi:n or a comma list; repeat for a 2-D sweep")
    p = add("partisan-check", cmd_partisan_check, "ratio invariance across partisan shares")
    p.add_argument("--gammas", default="0,0.25,0.5")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Disagreement as exc:
        log.error("%s", exc)
        return EXIT_DISAGREE
    except (NoEquilibriumError, NotConverged, DivergenceError) as exc:
        log.error("%s", exc)
        return EXIT_NONCONVERGED
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
