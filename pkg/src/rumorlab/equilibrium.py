"""Bayesian verification equilibrium.

Individuals verify messages in line with their bias at rate l and messages
against it at rate h. Each rate is the verification level at which the
marginal success probability equals c / (1 - posterior), where the posterior
is the steady-state probability that one's bias is correct given the message.
An equilibrium is a fixed point of that best-response map on [0, x_bar]^2.

Fixed points are located by reducing to one dimension: for fixed h the
l-equation has a unique solution l*(h), because its right-hand side is
nonincreasing in l. Every root of h -> g(H(l*(h), h)) - h is then bracketed on
a scan grid and refined, so all fixed points resolved by the grid are found.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .model import ModelParams, VerificationFunction
from .steady import partisan_steady_prevalence, steady_prevalence, truth_to_rumor

log = logging.getLogger(__name__)

EPS_RATE = 1e-9  # rates at or below this count as zero
DEDUP = 1e-6


class Kind(str, enum.Enum):
    NO_VERIFICATION = "NoVerification"
    OPPOSING_ONLY = "OpposingOnly"
    BOTH = "Both"

    def __str__(self):
        return self.value


class NoEquilibriumError(RuntimeError):
    pass


class RegimeBoundaryError(ValueError):
    """Equilibrium kind changes inside a finite-difference stencil."""


# -- posteriors and marginal conditions ----------------------------------------

def posterior_same(l: float, h: float, beta: float, y: float) -> float:
    """Steady-state Pr(bias correct | message in line with bias)."""
    if h >= 1:
        raise ValueError("h must be below 1")
    num = y * (beta + (1 - beta) * h - beta * (h - l))
    den = num + (1 - y) * beta * (1 - h)
    if den <= 0:
        raise ValueError(f"degenerate posterior (beta={beta}, h={h})")
    return num / den


def posterior_opposing(l: float, h: float, beta: float, y: float) -> float:
    """Steady-state Pr(bias correct | message against bias)."""
    if beta >= 1:
        raise ValueError("beta = 1: no cross-group meetings, posterior undefined")
    num = y * (1 - beta) * (1 - h)
    return num / (num + (1 - y) * (1 - beta + beta * l))


def cond_y(l: float, h: float, beta: float, y: float) -> bool:
    """True when keeping one's bias after failed verification is optimal."""
    if h >= 1:
        return False
    return y / (1 - y) >= (1 - beta + beta * l) / ((1 - beta) * (1 - h)) * (1 - 1e-12)


def marginal_targets(l, h, c, y, beta):
    """Marginal success probabilities (L, H) required by the first-order conditions.

    L = c / (1 - posterior_same), H = c / (1 - posterior_opposing). Works on
    floats and numpy arrays.
    """
    L = c * (y * (beta + (1 - beta) * h - beta * (h - l)) / (beta * (1 - y) * (1 - h)) + 1)
    H = c * (y * (1 - beta) * (1 - h) / ((1 - y) * (1 - beta + beta * l)) + 1)
    return L, H


def _check_beta(beta):
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta={beta}: equilibrium conditions are degenerate for beta in {{0, 1}}")


def best_response(l: float, h: float, params: ModelParams, fn: VerificationFunction
                  ) -> tuple[float, float]:
    """Optimal (l', h') when the population verifies at rates (l, h)."""
    _check_beta(params.beta)
    rmax = fn.rate_max
    h = min(h, rmax)
    L, H = marginal_targets(l, h, params.c, params.y, params.beta)
    return min(float(fn.g(L)), rmax), min(float(fn.g(H)), rmax)


def ttr_from_target(L: float, y: float, c: float, beta: float) -> float:
    """Truth-to-rumor ratio expressed through the own-bias marginal L."""
    if c <= 0:
        raise ValueError("c must be positive")
    return 1 + 2 / y * (L * (1 - y) / c - 1) * beta


ttr_prop5 = ttr_from_target


# -- scalar solver ---------------------------------------------------------------

def _scan_grid(rmax: float) -> np.ndarray:
    s = np.concatenate([np.linspace(0.0, 1.0, 49), np.geomspace(1e-8, 1e-2, 7),
                        1.0 - np.geomspace(1e-2, 1e-9, 15)])
    return np.unique(np.clip(s, 0.0, 1.0)) * rmax


def _brent(f, a, b):
    return brentq(f, a, b, xtol=1e-15, rtol=1e-15, maxiter=500)


def _l_star(h, c, y, beta, g, rmax):
    def F(l):
        return min(float(g(marginal_targets(l, h, c, y, beta)[0])), rmax) - l

    if F(0.0) <= 0:
        return 0.0
    if F(rmax) >= 0:
        return rmax
    return _brent(F, 0.0, rmax)


def _fixed_points(c, y, beta, fn):
    g, rmax = fn.g, fn.rate_max

    def Hres(h):
        l = _l_star(h, c, y, beta, g, rmax)
        return min(float(g(marginal_targets(l, h, c, y, beta)[1])), rmax) - h

    grid = _scan_grid(rmax)
    vals = [Hres(h) for h in grid]
    roots = []
    for i, (h0, v0) in enumerate(zip(grid, vals)):
        if v0 == 0:
            roots.append(h0)
        elif i + 1 < len(grid) and v0 * vals[i + 1] < 0:
            roots.append(_brent(Hres, h0, grid[i + 1]))
    out = []
    for h in sorted(roots):
        l = _l_star(h, c, y, beta, g, rmax)
        if not any(abs(h - h2) < DEDUP and abs(l - l2) < DEDUP for l2, h2 in out):
            out.append((l, h))
    return out


def classify_kind(l: float, h: float) -> Kind:
    if h <= EPS_RATE and l <= EPS_RATE:
        return Kind.NO_VERIFICATION
    if l <= EPS_RATE:
        return Kind.OPPOSING_ONLY
    return Kind.BOTH


@dataclass
class EquilibriumSolution:
    l: float
    h: float
    kind: Kind
    L: float
    H: float
    posterior_same: float
    posterior_opposing: float
    ttr: float
    cond_y_ok: bool
    residual: float
    multiplicity: list[tuple[float, float]] = field(default_factory=list)
    params: ModelParams | None = None
    x_bar: float = 1.0

    @property
    def n_solutions(self) -> int:
        return len(self.multiplicity)


def _describe(l, h, params, fn, roots) -> EquilibriumSolution:
    c, y, beta = params.c, params.y, params.beta
    L, H = marginal_targets(l, h, c, y, beta)
    bl, bh = best_response(l, h, params, fn)
    return EquilibriumSolution(
        l=l, h=h, kind=classify_kind(l, h), L=L, H=H,
        posterior_same=posterior_same(l, h, beta, y),
        posterior_opposing=posterior_opposing(l, h, beta, y),
        ttr=truth_to_rumor(l, h, beta),
        cond_y_ok=cond_y(l, h, beta, y),
        residual=max(abs(bl - l), abs(bh - h)),
        multiplicity=list(roots), params=params, x_bar=fn.x_bar,
    )


def solve_equilibrium(params: ModelParams, fn: VerificationFunction) -> EquilibriumSolution:
    """Find all equilibria; the one with the smallest h is returned as canonical.

    Violations of the prior condition do not abort: they are reported through
    `cond_y_ok`. Raises NoEquilibriumError if no fixed point is found.
    """
    _check_beta(params.beta)
    roots = _fixed_points(params.c, params.y, params.beta, fn)
    if not roots:
        raise NoEquilibriumError(f"no fixed point found for {params}")
    l, h = roots[0]
    sol = _describe(l, h, params, fn, roots)
    if sol.residual > 1e-10:
        log.warning("equilibrium residual %.3g exceeds 1e-10", sol.residual)
    return sol


def all_equilibria(params: ModelParams, fn: VerificationFunction) -> list[EquilibriumSolution]:
    _check_beta(params.beta)
    roots = _fixed_points(params.c, params.y, params.beta, fn)
    return [_describe(l, h, params, fn, roots) for l, h in roots]


def damped_iteration(params: ModelParams, fn: VerificationFunction,
                     start: tuple[float, float] = (0.0, 0.0), damping: float = 0.5,
                     tol: float = 1e-12, max_iter: int = 100_000):
    """Plain damped best-response iteration z <- z + damping * (BR(z) - z).

    Returns (l, h, converged, residual, iterations). Kept as an independent
    check on `solve_equilibrium`; it can oscillate when the best response is
    steep (small c, prior close to one), where a smaller damping is needed.
    """
    l, h = start
    res = math.inf
    for it in range(1, max_iter + 1):
        bl, bh = best_response(l, h, params, fn)
        res = max(abs(bl - l), abs(bh - h))
        if res < tol:
            return l, h, True, res, it
        l += damping * (bl - l)
        h += damping * (bh - h)
    return l, h, False, res, max_iter


# -- vectorised solver for parameter grids -------------------------------------

def _l_star_vec(h, c, y, beta, g, rmax, iters=60):
    # L is affine in l for fixed h: L = a + b l
    b = c * y / ((1 - y) * (1 - h))
    a = c * (y * (beta + (1 - beta) * h - beta * h) / (beta * (1 - y) * (1 - h)) + 1)

    def F(l):
        return np.minimum(g(a + b * l), rmax) - l

    lo = np.zeros_like(h)
    hi = np.full_like(h, rmax)
    f0 = F(lo)
    fmax = F(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = F(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(fmax >= 0, rmax, out)
    return np.where(f0 <= 0, 0.0, out)


def _h_res_vec(h, c, y, beta, g, rmax):
    l = _l_star_vec(h, c, y, beta, g, rmax)
    return np.minimum(g(marginal_targets(l, h, c, y, beta)[1]), rmax) - h, l


@dataclass
class GridSolution:
    l: np.ndarray
    h: np.ndarray
    n_solutions: np.ndarray
    residual: np.ndarray
    cond_y_ok: np.ndarray
    ttr: np.ndarray


def solve_equilibrium_grid(c, y, beta, fn: VerificationFunction, iters: int = 60,
                           chunk: int = 20_000) -> GridSolution:
    """Vectorised `solve_equilibrium` over broadcast arrays of (c, y, beta).

    Same reduction and scan grid as the scalar solver, with bisection in place
    of Brent's method. Returns the canonical (smallest h) solution per cell.
    """
    c, y, beta = (np.asarray(a, dtype=float) for a in np.broadcast_arrays(c, y, beta))
    shape = c.shape
    c, y, beta = c.ravel(), y.ravel(), beta.ravel()
    if np.any((beta <= 0) | (beta >= 1)):
        raise ValueError("beta must lie in (0, 1)")
    parts = [_solve_chunk(c[i:i + chunk], y[i:i + chunk], beta[i:i + chunk], fn, iters)
             for i in range(0, c.size, chunk)]
    fields_ = [np.concatenate(col).reshape(shape) for col in zip(*parts)]
    return GridSolution(*fields_)


def _solve_chunk(c, y, beta, fn, iters):
    g, rmax = fn.g, fn.rate_max
    n = c.size
    grid = _scan_grid(rmax)
    m = grid.size
    hh = np.broadcast_to(grid, (n, m)).ravel()
    rep = lambda a: np.repeat(a, m)  # noqa: E731
    vals, _ = _h_res_vec(hh, rep(c), rep(y), rep(beta), g, rmax)
    vals = vals.reshape(n, m)

    cell_z, col_z = np.nonzero(vals == 0)
    roots_cell = [cell_z]
    roots_h = [grid[col_z]]
    cross = vals[:, :-1] * vals[:, 1:] < 0
    cell_b, col_b = np.nonzero(cross)
    if cell_b.size:
        lo, hi = grid[col_b], grid[col_b + 1]
        sgn_lo = np.sign(vals[cell_b, col_b])
        cb, yb, bb = c[cell_b], y[cell_b], beta[cell_b]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            v, _ = _h_res_vec(mid, cb, yb, bb, g, rmax)
            same = np.sign(v) == sgn_lo
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        roots_cell.append(cell_b)
        roots_h.append(0.5 * (lo + hi))
    cell = np.concatenate(roots_cell)
    hr = np.concatenate(roots_h)
    order = np.lexsort((hr, cell))
    cell, hr = cell[order], hr[order]
    lr = _l_star_vec(hr, c[cell], y[cell], beta[cell], g, rmax)

    new = np.ones(cell.size, dtype=bool)
    new[1:] = (cell[1:] != cell[:-1]) | (np.abs(hr[1:] - hr[:-1]) >= DEDUP)
    counts = np.bincount(cell[new], minlength=n)
    first = np.full(n, -1)
    uniq, idx = np.unique(cell, return_index=True)
    first[uniq] = idx
    if np.any(first < 0):
        raise NoEquilibriumError(f"{np.sum(first < 0)} cells without a fixed point")
    l, h = lr[first], hr[first]

    L, H = marginal_targets(l, h, c, y, beta)
    res = np.maximum(np.abs(np.minimum(g(L), rmax) - l), np.abs(np.minimum(g(H), rmax) - h))
    ok = y / (1 - y) >= (1 - beta + beta * l) / ((1 - beta) * (1 - h)) * (1 - 1e-12)
    ttr = (1 + h) / (1 - h) - 2 * beta * (h - l) / (1 - h)
    return l, h, counts, res, ok, ttr


# -- thresholds ----------------------------------------------------------------

def h_when_l_zero(c: float, y: float, fn: VerificationFunction, tol: float = 1e-13) -> float:
    """Opposing-message rate h when own-bias messages go unverified.

    Solves h = g(c (1 + y (1 - h) / (1 - y))) by bisection; independent of beta.
    Corners h = 0 and h = x_bar are returned when no interior root exists.
    """
    rmax = fn.rate_max

    def F(h):
        return min(float(fn.g(c * (1 + y * (1 - h) / (1 - y)))), rmax) - h

    if F(0.0) <= 0:
        return 0.0
    if F(rmax) >= 0:
        return rmax
    lo, hi = 0.0, rmax
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if F(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class Thresholds:
    c_bar: float
    c_under: float | None  # boundary found with the full solver
    c_under_closed: float | None  # boundary from the l = 0 marginal condition
    y_bar: float | None
    notes: list[str] = field(default_factory=list)


def _bisect_bool(pred, lo, hi, tol):
    """Boundary between pred(lo) and pred(hi) (which must differ)."""
    plo = pred(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid) == plo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def c_under_solver(params: ModelParams, fn: VerificationFunction, n_scan: int = 25,
                   tol: float = 1e-12) -> float | None:
    """Largest cost below which own-bias messages are verified (l > 0).

    Returns c_bar when l > 0 all the way up to c_bar and None when l = 0 for
    every positive cost.
    """
    c_bar = fn.d_bar * (1 - params.y)
    # exact zero: l* is returned as 0.0 whenever the own-bias marginal is met at l = 0
    l_pos = lambda c: solve_equilibrium(params.with_(c=c), fn).l > 0.0  # noqa: E731
    cs = c_bar * np.linspace(1e-4, 1 - 1e-9, n_scan)
    flags = [l_pos(c) for c in cs]
    if not flags[0]:
        return None
    if all(flags):
        return c_bar
    i = flags.index(False)
    return _bisect_bool(l_pos, cs[i - 1], cs[i], tol)


def c_under_closed(params: ModelParams, fn: VerificationFunction, n_scan: int = 200,
                   tol: float = 1e-12) -> float | None:
    """Cost boundary from c = d_bar beta (1-h)(1-y) / (beta + h (y - (1+y) beta)).

    h is the l = 0 opposing rate at cost c, so the relation is solved for c.
    The sign of D(c) below tells whether the own-bias marginal at l = 0 falls
    short of d_bar (l > 0).
    """
    y, beta, d_bar = params.y, params.beta, fn.d_bar
    c_bar = d_bar * (1 - y)

    def D(c):
        h = h_when_l_zero(c, y, fn)
        return c * (beta + h * (y - (1 + y) * beta)) - d_bar * beta * (1 - h) * (1 - y)

    l_pos = lambda c: D(c) < 0  # noqa: E731
    cs = c_bar * np.linspace(1e-4, 1 - 1e-9, n_scan)
    flags = [l_pos(c) for c in cs]
    if not flags[0]:
        return None
    if all(flags):
        return c_bar
    i = flags.index(False)
    return _bisect_bool(l_pos, cs[i - 1], cs[i], tol)


def y_bar(params: ModelParams, fn: VerificationFunction, n_scan: int = 40,
          tol: float = 1e-10) -> float | None:
    """Prior threshold above which the prior condition holds in equilibrium.

    Returns 0.5 when it holds for every prior and None when no switch from
    failing to holding is found on the scan.
    """
    ok = lambda y: solve_equilibrium(params.with_(y=y), fn).cond_y_ok  # noqa: E731
    ys = np.linspace(0.5 + 1e-6, 1 - 1e-6, n_scan)
    flags = [ok(v) for v in ys]
    if flags[0]:
        return 0.5
    if True not in flags:
        return None
    i = flags.index(True)
    return _bisect_bool(ok, ys[i - 1], ys[i], tol)


def thresholds(params: ModelParams, fn: VerificationFunction) -> Thresholds:
    """Cost thresholds c_bar, c_under and the prior threshold y_bar."""
    out = Thresholds(c_bar=fn.d_bar * (1 - params.y),
                     c_under=c_under_solver(params, fn),
                     c_under_closed=c_under_closed(params, fn),
                     y_bar=y_bar(params, fn))
    if out.c_under is None:
        out.notes.append("l = 0 for every cost below c_bar: c_under does not exist")
    elif out.c_under >= out.c_bar:
        out.notes.append("l > 0 for every cost below c_bar: no opposing-only range")
    if (out.c_under is None) != (out.c_under_closed is None) or (
            out.c_under is not None and abs(out.c_under - out.c_under_closed) > 1e-8):
        out.notes.append(f"c_under disagreement: solver {out.c_under}, "
                         f"closed form {out.c_under_closed}")
    return out


# -- homophily comparative statics ---------------------------------------------

@dataclass
class HomophilySensitivity:
    dttr_dbeta: float
    dL_dbeta: float
    condition_flag: bool
    kind: Kind
    h_invariant: bool | None  # opposing-only branch: h unchanged across the stencil


def homophily_sensitivity(params: ModelParams, fn: VerificationFunction, db: float = 1e-4
                          ) -> HomophilySensitivity:
    """Central differences of the ratio and of L in beta at the canonical equilibrium.

    `condition_flag` is L >= c/(1-y) + beta |dL/dbeta|, the condition for a
    nonnegative total effect of homophily.
    """
    b = params.beta
    lo = solve_equilibrium(params.with_(beta=b - db), fn)
    mid = solve_equilibrium(params, fn)
    hi = solve_equilibrium(params.with_(beta=b + db), fn)
    if not lo.kind == mid.kind == hi.kind:
        raise RegimeBoundaryError(
            f"kind changes across beta={b}±{db}: {lo.kind}, {mid.kind}, {hi.kind}")
    dttr = (hi.ttr - lo.ttr) / (2 * db)
    dL = (hi.L - lo.L) / (2 * db)
    flag = mid.L >= params.c / (1 - params.y) + b * abs(dL)
    h_inv = abs(hi.h - lo.h) <= 1e-8 if mid.kind is Kind.OPPOSING_ONLY else None
    return HomophilySensitivity(dttr, dL, flag, mid.kind, h_inv)


# -- partisans -----------------------------------------------------------------

def partisan_best_response(l: float, h: float, params: ModelParams, fn: VerificationFunction
                           ) -> tuple[float, float]:
    """Effective rates targeted by non-partisans who verify at (l, h).

    Posteriors use the partisan steady state, which coincides with the
    baseline one at effective rates (1 - gamma) l, (1 - gamma) h. The returned
    pair is compared with those effective rates at a fixed point.
    """
    g = params.gamma
    return best_response((1 - g) * l, (1 - g) * h, params, fn)


@dataclass
class PartisanEquilibrium:
    gamma: float
    l: float  # non-partisan rates
    h: float
    l_eff: float  # population-level rates (1 - gamma) l, (1 - gamma) h
    h_eff: float
    rho0: float
    rho1: float
    ttr: float
    cap_violation: bool
    baseline: EquilibriumSolution


def solve_partisan_equilibrium(params: ModelParams, fn: VerificationFunction
                               ) -> PartisanEquilibrium:
    """Equilibrium with a share gamma of partisans in each group.

    Non-partisans' verification compensates so that the effective rates
    (1 - gamma) l, (1 - gamma) h equal the baseline equilibrium rates.
    `cap_violation` flags non-partisan rates that would have to exceed x_bar.
    """
    base = solve_equilibrium(params, fn)
    g = params.gamma
    l, h = base.l / (1 - g), base.h / (1 - g)
    cap = h > fn.rate_max + 1e-12
    if cap:
        log.warning("gamma=%s requires non-partisan rate h=%.4g above x_bar=%s",
                    g, h, fn.x_bar)
        # infeasible for non-partisans; report the state the effective rates imply
        ss = steady_prevalence(base.l, base.h, params)
    else:
        ss = partisan_steady_prevalence(l, h, params)
    rho0, rho1, ttr = ss.rho0, ss.rho1, ss.ttr
    return PartisanEquilibrium(g, l, h, base.l, base.h, rho0, rho1, ttr, cap, base)
