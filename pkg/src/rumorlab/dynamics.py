"""Mean-field laws of motion for truth and rumor prevalence.

State components are within-group proportions: rho00 is the share of group 0
holding opinion 0, rho01 and rho11 the shares of group 1 holding opinions 0
and 1. Group 0 never holds the rumor, so there is no rho10.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, astuple

import numpy as np

from .model import ModelParams

log = logging.getLogger(__name__)

_TOL = 1e-9


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PrevalenceState:
    rho00: float
    rho01: float
    rho11: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite state {vals}")
        if any(v < -_TOL or v > 1 + _TOL for v in vals):
            raise ValueError(f"state components must lie in [0, 1]: {vals}")
        if self.rho01 + self.rho11 > 1 + _TOL:
            raise ValueError("rho01 + rho11 must not exceed 1")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


@dataclass(frozen=True)
class PartisanState:
    """Group-1 split into partisans (share gamma) and non-partisans.

    rho_g1 is the informed share among type-1 partisans, who always hold
    opinion 1; rho_n0 and rho_n1 are opinion shares among type-1 non-partisans.
    """

    rho00: float
    rho_g1: float
    rho_n0: float
    rho_n1: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite state {vals}")
        if any(v < -_TOL or v > 1 + _TOL for v in vals):
            raise ValueError(f"state components must lie in [0, 1]: {vals}")
        if self.rho_n0 + self.rho_n1 > 1 + _TOL:
            raise ValueError("rho_n0 + rho_n1 must not exceed 1")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


DEFAULT_SEED = PrevalenceState(0.01, 0.005, 0.005)


def _rhs(s, nu_k, delta, beta, l, h):
    r00, r01, r11 = s
    s1 = 1.0 - r01 - r11
    return (
        0.5 * (1.0 - r00) * nu_k * (beta * r00 + (1.0 - beta) * (r01 + r11)) - 0.5 * r00 * delta,
        0.5 * s1 * nu_k * (beta * (h * r01 + l * r11) + (1.0 - beta) * h * r00) - 0.5 * r01 * delta,
        0.5 * s1 * nu_k * (beta * ((1.0 - h) * r01 + (1.0 - l) * r11)
                           + (1.0 - beta) * (1.0 - h) * r00) - 0.5 * r11 * delta,
    )


def _rhs_partisan(s, nu_k, delta, beta, l, h, gamma):
    r00, rg, n0, n1 = s
    iota0 = r00
    iota1 = gamma * rg + (1.0 - gamma) * (n0 + n1)
    rumor1 = (1.0 - gamma) * n1 + gamma * rg
    sn = 1.0 - n0 - n1
    return (
        0.5 * (1.0 - r00) * nu_k * (beta * iota0 + (1.0 - beta) * iota1) - 0.5 * r00 * delta,
        0.5 * gamma * (1.0 - rg) * nu_k * (beta * iota1 + (1.0 - beta) * iota0)
        - 0.5 * gamma * rg * delta,
        0.5 * (1.0 - gamma) * sn * nu_k * (beta * l * rumor1 + beta * h * (1.0 - gamma) * n0
                                           + (1.0 - beta) * h * r00)
        - 0.5 * (1.0 - gamma) * n0 * delta,
        0.5 * (1.0 - gamma) * sn * nu_k * (beta * (1.0 - l) * rumor1
                                           + (1.0 - h) * (beta * (1.0 - gamma) * n0
                                                          + (1.0 - beta) * r00))
        - 0.5 * (1.0 - gamma) * n1 * delta,
    )


def _check_rates(l, h):
    for name, v in (("l", l), ("h", h)):
        if not (math.isfinite(v) and 0.0 <= v <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {v}")


def derivatives(state: PrevalenceState, params: ModelParams, l: float, h: float
                ) -> tuple[float, float, float]:
    """Time derivatives (d rho00, d rho01, d rho11) at `state`.

    `l` and `h` are the verification rates of messages in line with and
    against one's bias. They are exogenous here; l <= h is not required.
    """
    _check_rates(l, h)
    return _rhs(astuple(state), params.nu * params.k, params.delta, params.beta, l, h)


def partisan_derivatives(state: PartisanState, params: ModelParams, l: float, h: float
                         ) -> tuple[float, float, float, float]:
    """Time derivatives of (rho00, rho_g1, rho_n0, rho_n1) with partisan share gamma."""
    _check_rates(l, h)
    return _rhs_partisan(astuple(state), params.nu * params.k, params.delta, params.beta,
                         l, h, params.gamma)


def aggregate(state: PrevalenceState | PartisanState, gamma: float = 0.0
              ) -> tuple[float, float, float]:
    """Population-level (rho0, rho1, iota); groups have equal size."""
    if isinstance(state, PartisanState):
        iota1 = gamma * state.rho_g1 + (1 - gamma) * (state.rho_n0 + state.rho_n1)
        rho1 = ((1 - gamma) * state.rho_n1 + gamma * state.rho_g1) / 2
        rho0 = (state.rho00 + (1 - gamma) * state.rho_n0) / 2
        return rho0, rho1, (state.rho00 + iota1) / 2
    rho0 = (state.rho00 + state.rho01) / 2
    rho1 = state.rho11 / 2
    return rho0, rho1, (state.rho00 + state.rho01 + state.rho11) / 2


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (n, 3) baseline or (n, 4) partisan
    converged: bool
    clip_events: int
    gamma: float | None = None

    @property
    def final(self):
        s = self.states[-1]
        if self.gamma is None:
            return PrevalenceState(*np.clip(s, 0.0, 1.0))
        return PartisanState(*np.clip(s, 0.0, 1.0))

    def aggregates(self) -> np.ndarray:
        """(n, 3) array of rho0, rho1, iota."""
        s = self.states
        if self.gamma is None:
            return np.column_stack([(s[:, 0] + s[:, 1]) / 2, s[:, 2] / 2,
                                    s.sum(axis=1) / 2])
        g = self.gamma
        iota1 = g * s[:, 1] + (1 - g) * (s[:, 2] + s[:, 3])
        return np.column_stack([(s[:, 0] + (1 - g) * s[:, 2]) / 2,
                                ((1 - g) * s[:, 3] + g * s[:, 1]) / 2,
                                (s[:, 0] + iota1) / 2])


def _project(s, paired):
    """Clip to the feasible set; return (state, clipped_flag)."""
    lo, hi = -1e-6, 1 + 1e-6
    if any(v < lo or v > hi or v != v for v in s):
        raise DivergenceError(f"state left the unit box: {s}")
    out = [min(max(v, 0.0), 1.0) for v in s]
    i, j = paired
    tot = out[i] + out[j]
    if tot > 1.0:
        out[i] /= tot
        out[j] /= tot
    clipped = out != list(s)
    if clipped and min(s) < -1e-12:
        log.debug("clipped undershoot %s", s)
    return tuple(out), clipped


def _rk4(f, s, dt, horizon, tol, record_every, paired):
    n_steps = int(math.ceil(horizon / dt))
    ts, rows = [0.0], [s]
    clips = 0
    done = 0
    converged = False
    while True:
        k1 = f(s)
        if max(abs(v) for v in k1) < tol:
            converged = True
            break
        if done == n_steps:
            break
        k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(s, k1)))
        k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(s, k2)))
        k4 = f(tuple(a + dt * b for a, b in zip(s, k3)))
        s = tuple(a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
                  for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
        s, clipped = _project(s, paired)
        clips += clipped
        done += 1
        if done % record_every == 0:
            ts.append(done * dt)
            rows.append(s)
    if rows[-1] is not s:
        ts.append(done * dt)
        rows.append(s)
    return np.array(ts), np.array(rows), converged, clips


def integrate(state0: PrevalenceState, params: ModelParams, l: float, h: float,
              horizon: float = 2000.0, dt: float | None = None, tol: float = 1e-10,
              record_every: int = 1) -> Trajectory:
    """Fixed-step RK4 integration of the baseline system.

    Stops early once max |derivative| < `tol` (the `converged` flag). `dt`
    defaults to 0.01 / delta and must satisfy k * nu * dt < 1. States are
    clipped back into the feasible set after each step; leaving
    [-1e-6, 1 + 1e-6] raises DivergenceError.
    """
    _check_rates(l, h)
    dt = 0.01 / params.delta if dt is None else dt
    params.check_step(dt)
    args = (params.nu * params.k, params.delta, params.beta, l, h)
    t, rows, conv, clips = _rk4(lambda s: _rhs(s, *args), astuple(state0), dt, horizon,
                                tol, record_every, (1, 2))
    if clips:
        log.info("integrate: %d clipping events", clips)
    return Trajectory(t, rows, conv, clips)


def integrate_partisan(state0: PartisanState, params: ModelParams, l: float, h: float,
                       horizon: float = 2000.0, dt: float | None = None, tol: float = 1e-10,
                       record_every: int = 1) -> Trajectory:
    _check_rates(l, h)
    dt = 0.01 / params.delta if dt is None else dt
    params.check_step(dt)
    args = (params.nu * params.k, params.delta, params.beta, l, h, params.gamma)
    t, rows, conv, clips = _rk4(lambda s: _rhs_partisan(s, *args), astuple(state0), dt,
                                horizon, tol, record_every, (2, 3))
    return Trajectory(t, rows, conv, clips, gamma=params.gamma)
