"""Model parameters and the verification technology x(alpha)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

# Rates are clamped below this when formulas divide by (1 - h).
H_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Diffusion and preference parameters.

    k       meetings per instant
    nu      transmission rate per meeting
    delta   death (replacement) rate
    beta    homophily, probability a partner shares one's bias group
    y       prior that one's bias is the true state, in (0.5, 1)
    c       marginal verification cost
    gamma   fraction of partisans in each group
    """

    k: int = 4
    nu: float = 0.05
    delta: float = 0.1
    beta: float = 0.6
    y: float = 0.8
    c: float = 0.1
    gamma: float = 0.0

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        for name in ("nu", "delta", "beta", "y", "c", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        # nu = 0 is admitted so that the no-transmission limit can be simulated
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0.5 < self.y < 1.0:
            raise ValueError(f"y must lie in (0.5, 1), got {self.y}")
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")

    @property
    def lam(self) -> float:
        """Effective diffusion rate nu / delta."""
        return self.nu / self.delta

    @property
    def lam_k(self) -> float:
        return self.nu / self.delta * self.k

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def check_step(self, dt: float, limit: float = 1.0) -> None:
        """Raise if k * nu * dt is not below `limit`."""
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if self.k * self.nu * dt >= limit:
            raise ValueError(
                f"k*nu*dt = {self.k * self.nu * dt:.4g} must be < {limit}; reduce dt"
            )

    def warnings(self) -> list[str]:
        out = []
        if self.beta < 0.5:
            out.append(f"beta={self.beta} < 0.5: heterophilous mixing")
        if self.beta in (0.0, 1.0):
            out.append(f"beta={self.beta}: posteriors are degenerate")
        if self.lam_k <= 1:
            out.append(f"lambda*k={self.lam_k:.4g} <= 1: information dies out")
        return out


@dataclass(frozen=True)
class VerificationFunction:
    """Verification technology: success probability x(alpha) of effort alpha.

    `eval` and `inverse_marginal` must accept numpy arrays. `inverse_marginal`
    is g, the inverse of the subderivative: the verification level at which the
    marginal success probability equals d, clamped to [0, x_bar].
    """

    eval: Callable
    x_bar: float
    d_bar: float
    inverse_marginal: Callable
    inverse: Callable | None = None
    second_derivative: Callable | None = None
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.x_bar <= 1.0:
            raise ValueError(f"x_bar must lie in (0, 1], got {self.x_bar}")

    def __call__(self, alpha):
        return self.eval(alpha)

    def g(self, d):
        return self.inverse_marginal(d)

    @property
    def rate_max(self) -> float:
        """Largest admissible verification rate, with x_bar = 1 clamped."""
        return min(self.x_bar, H_MAX)


def make_exponential_capped(x_bar: float = 1.0) -> VerificationFunction:
    """x(alpha) = 1 - exp(-alpha), capped at x_bar.

    The marginal at level v < x_bar is 1 - v, so g(d) = 1 - d on
    (1 - x_bar, 1), g = x_bar below and g = 0 from d_bar = 1 upwards.
    x_bar = 1 is the uncapped limit.
    """
    if not 0.0 < x_bar <= 1.0:
        raise ValueError(f"x_bar must lie in (0, 1], got {x_bar}")
    x_bar = float(x_bar)
    kink = math.inf if x_bar == 1.0 else -math.log1p(-x_bar)

    def x(alpha):
        a = np.asarray(alpha, dtype=float)
        out = np.where(a < kink, -np.expm1(-np.maximum(a, 0.0)), x_bar)
        return out if out.ndim else float(out)

    def g(d):
        d = np.asarray(d, dtype=float)
        out = np.clip(1.0 - d, 0.0, x_bar)
        return out if out.ndim else float(out)

    def x_inv(v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            out = -np.log1p(-np.minimum(v, x_bar))
        return out if out.ndim else float(out)

    def x2(alpha):
        a = np.asarray(alpha, dtype=float)
        out = np.where(a < kink, -np.exp(-a), 0.0)
        return out if out.ndim else float(out)

    return VerificationFunction(
        eval=x,
        x_bar=x_bar,
        d_bar=1.0,
        inverse_marginal=g,
        inverse=x_inv,
        second_derivative=x2,
        name="exp_cap",
    )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_h1(fn: VerificationFunction, grid_size: int = 100, alpha_max: float = 1e3,
                tol: float = 1e-12) -> ValidationReport:
    """Sample-based check that `fn` is a valid verification technology.

    x is sampled on 0 plus a geometric grid in [1e-6, alpha_max]. Reported:
    x(0) != 0, decreasing samples, no increase near the origin, slopes that
    increase (non-concavity), samples above x_bar or a limit below x_bar, and
    inconsistencies of g (the inverse marginal) with x_bar, d_bar and x.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    rep = ValidationReport()
    alpha = np.concatenate([[0.0], np.geomspace(1e-6, alpha_max, grid_size - 1)])
    xs = np.asarray([fn(a) for a in alpha], dtype=float)
    if not np.all(np.isfinite(xs)):
        raise ValueError("verification function returned non-finite values")

    if abs(xs[0]) > tol:
        rep.violations.append(f"x(0) = {xs[0]:.3g}, expected 0")
    if np.any(np.diff(xs) < -tol):
        rep.violations.append("x is not nondecreasing")
    if not xs[1] > xs[0]:
        rep.violations.append("x is not strictly increasing near 0")
    slopes = np.diff(xs) / np.diff(alpha)
    if np.any(np.diff(slopes) > 1e-9 * np.maximum(1.0, np.abs(slopes[:-1]))):
        rep.violations.append("x is not concave on the sampled grid")
    if xs.max() > fn.x_bar + tol:
        rep.violations.append(f"x exceeds its cap x_bar={fn.x_bar}")
    if xs[-1] < fn.x_bar - 1e-6:
        rep.violations.append(
            f"x({alpha_max:g}) = {xs[-1]:.6g} does not approach x_bar={fn.x_bar}")

    d = np.linspace(0.0, 2.0 * max(fn.d_bar, 1e-9), 201)[1:]
    gs = np.asarray([fn.g(v) for v in d], dtype=float)
    if not np.all(np.isfinite(gs)):
        raise ValueError("inverse marginal returned non-finite values")
    if np.any(np.diff(gs) > tol):
        rep.violations.append("g is not nonincreasing")
    if abs(fn.g(fn.d_bar)) > tol:
        rep.violations.append(f"g(d_bar) = {fn.g(fn.d_bar):.3g}, expected 0")
    if abs(fn.g(1e-12) - fn.x_bar) > 1e-9:
        rep.violations.append(f"g(0+) = {fn.g(1e-12):.6g}, expected x_bar={fn.x_bar}")

    if fn.inverse is not None:
        # interior marginal consistency: x'(x^-1(g(d))) == d
        for dv in np.linspace(0.05, 0.95, 19) * fn.d_bar:
            v = float(fn.g(dv))
            if not 1e-6 < v < fn.x_bar - 1e-6:
                continue
            a = float(fn.inverse(v))
            eps = 1e-6 * max(1.0, a)
            deriv = (fn(a + eps) - fn(a - eps)) / (2 * eps)
            if abs(deriv - dv) > 1e-5 * max(1.0, dv):
                rep.violations.append(
                    f"marginal at g({dv:.3g}) is {deriv:.6g}, expected {dv:.6g}")
                break
    return rep


# -- flat key/value configuration ---------------------------------------------

_PARAM_KEYS = {f.name for f in fields(ModelParams)}
_FAMILIES = {"exp_cap": make_exponential_capped}


def parse_config(text: str) -> dict[str, str]:
    """Parse `key = value` (or `key: value`) lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, val = line.split(sep, 1)
                break
        else:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        out[key.strip()] = val.strip()
    return out


def load_config(path: str | Path) -> dict[str, str]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def params_from_mapping(m: Mapping[str, object], base: ModelParams | None = None,
                        ) -> tuple[ModelParams, VerificationFunction]:
    """Build parameters and verification function from a flat mapping.

    Recognised keys are the ModelParams fields plus `xbar` and `fn`; unknown
    keys are ignored so that exported CSV rows can be fed back in.
    """
    base = base or ModelParams()
    changes = {}
    for key in _PARAM_KEYS:
        if key in m and m[key] not in (None, ""):
            changes[key] = int(float(m[key])) if key == "k" else float(m[key])
    params = replace(base, **changes)
    family = str(m.get("fn", "exp_cap") or "exp_cap")
    if family not in _FAMILIES:
        raise ValueError(f"unknown verification family {family!r}")
    xbar = float(m["xbar"]) if m.get("xbar") not in (None, "") else 1.0
    return params, _FAMILIES[family](xbar)
