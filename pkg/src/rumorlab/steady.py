"""Closed-form steady states, their stability, and the truth-to-rumor ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PartisanState, PrevalenceState, _rhs
from .model import ModelParams

INF = math.inf  # truth-to-rumor ratio when the rumor is extinct


@dataclass(frozen=True)
class SteadyState:
    iota: float
    rho0: float
    rho1: float
    ttr: float
    stable: bool
    positive: bool
    state: PrevalenceState | PartisanState


def information_prevalence(params: ModelParams) -> float:
    """Informed share 1 - 1/(lambda k) when lambda k > 1, else 0."""
    lk = params.lam_k
    return 1.0 - 1.0 / lk if lk > 1 else 0.0


def truth_to_rumor(l: float, h: float, beta: float) -> float:
    """rho0 / rho1 in steady state; INF when h = 1."""
    if h >= 1.0:
        return INF
    return (1 + h) / (1 - h) - 2 * beta * (h - l) / (1 - h)


def _shares(l, h, beta):
    """Steady-state (rho0, rho1) per unit of informed share."""
    den = 1.0 - beta * (h - l)
    if den <= 0:
        raise ValueError(f"degenerate steady state: beta*(h-l) = {beta * (h - l)}")
    return 0.5 * (1 + h - 2 * beta * (h - l)) / den, 0.5 * (1 - h) / den


def steady_prevalence(l: float, h: float, params: ModelParams) -> SteadyState:
    """Steady state for fixed verification rates `l` (own-bias messages) and `h`."""
    for name, v in (("l", l), ("h", h)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    iota = information_prevalence(params)
    a0, a1 = _shares(l, h, params.beta)
    rho0, rho1 = a0 * iota, a1 * iota
    state = PrevalenceState(iota, max(2 * rho0 - iota, 0.0), 2 * rho1)
    # the returned state is the locally stable one for either sign of lambda*k - 1
    return SteadyState(iota, rho0, rho1, truth_to_rumor(l, h, params.beta), stable=True,
                       positive=iota > 0, state=state)


def partisan_steady_prevalence(l: float, h: float, params: ModelParams) -> SteadyState:
    """Steady state when a share gamma of each group are partisans.

    `l` and `h` are the non-partisans' rates. The result equals the baseline
    steady state at effective rates (1 - gamma) l and (1 - gamma) h.
    """
    g = params.gamma
    iota = information_prevalence(params)
    den = 1 + params.beta * (1 - g) * (l - h)
    if den <= 0:
        raise ValueError("degenerate steady state")
    rho0 = 0.5 * (1 + (1 - g) * h + 2 * params.beta * (1 - g) * (l - h)) / den * iota
    rho1 = 0.5 * (1 - (1 - g) * h) / den * iota
    state = PartisanState(iota, iota, max((2 * rho0 - iota) / (1 - g), 0.0),
                          max((2 * rho1 - g * iota) / (1 - g), 0.0))
    ttr = truth_to_rumor((1 - g) * l, (1 - g) * h, params.beta)
    return SteadyState(iota, rho0, rho1, ttr, stable=True, positive=iota > 0, state=state)


def jacobian(state, params: ModelParams, l: float, h: float, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the baseline laws of motion."""
    s0 = np.asarray(state.as_array() if hasattr(state, "as_array") else state, dtype=float)
    args = (params.nu * params.k, params.delta, params.beta, l, h)
    J = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        J[:, j] = (np.array(_rhs(s0 + e, *args)) - np.array(_rhs(s0 - e, *args))) / (2 * step)
    return J


@dataclass(frozen=True)
class StabilityReport:
    label: str
    zero_max_real: float
    positive_max_real: float | None
    zero_stable: bool
    positive_stable: bool | None
    analytic_positive_stable: bool

    @property
    def agrees(self) -> bool:
        """Numeric eigenvalue signs match the lambda*k > 1 rule."""
        if self.analytic_positive_stable:
            return bool(self.positive_stable) and not self.zero_stable
        return self.zero_stable


def stability_classify(params: ModelParams, l: float = 0.0, h: float = 0.0,
                       tol: float = 1e-9) -> StabilityReport:
    """Classify the zero and positive steady states by Jacobian eigenvalues.

    A state is stable when the largest real part is below `tol`, which admits
    the marginal eigenvalue 0 at lambda*k = 1.
    """
    zero = jacobian(PrevalenceState(0, 0, 0), params, l, h)
    try:
        zmax = float(np.linalg.eigvals(zero).real.max())
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue solver failed at the zero state: {exc}") from exc
    zero_stable = zmax < tol
    pmax = pos_stable = None
    if params.lam_k > 1:
        ss = steady_prevalence(l, h, params)
        try:
            pmax = float(np.linalg.eigvals(jacobian(ss.state, params, l, h)).real.max())
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"eigenvalue solver failed at the positive state: {exc}") from exc
        pos_stable = pmax < -tol
    if pos_stable and not zero_stable:
        label = "zero-unstable-positive-stable"
    elif pos_stable:
        label = "positive-stable"
    elif zero_stable:
        label = "zero-stable"
    else:
        label = "unstable"
    return StabilityReport(label, zmax, pmax, zero_stable, pos_stable, params.lam_k > 1)
