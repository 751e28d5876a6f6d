"""Closed-form equilibria for the exponential verification technology with a cap.

With x(alpha) = 1 - exp(-alpha) capped at x_bar, the inverse marginal is
g(d) = clip(1 - d, 0, x_bar) and every equilibrium falls in one of six cases:

    I    l = h = 0
    II   l = 0, 0 < h < x_bar
    III  l = 0, h = x_bar
    IV   0 < l < h < x_bar
    V    0 < l < x_bar, h = x_bar
    VI   l = h = x_bar

Case boundaries in c are c_bar = 1 - y and c1..c4; each case has a prior
threshold (ybar2..ybar6) below which the prior condition fails, in which case
the point is labelled Invalid.

The c-thresholds order differently on either side of y = beta. c2 is where l
turns positive with h capped, c3 is where h reaches the cap with l > 0:

    y >= beta:  c4 <= c2 <= c1;  II above c1, III on [c2, c1], V on (c4, c2), VI below
    y <  beta:  c4 <= c3;        IV above c3, V on (c4, c3], VI below
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model import H_MAX
from .steady import truth_to_rumor

log = logging.getLogger(__name__)

CASES = ("I", "II", "III", "IV", "V", "VI")
TIE_TOL = 1e-12


def _xb(x_bar):
    # x_bar = 1 is handled as a limit so that the cap formulas stay finite
    return min(float(x_bar), H_MAX)


@dataclass
class ExpThresholds:
    c_bar: float
    c1: float
    c2: float
    c3: float | None
    c4: float
    ybar2: float
    ybar3: float
    ybar4: float | None
    ybar5: float | None
    ybar6: float
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("c_bar", "c1", "c2", "c3", "c4", "ybar2", "ybar3", "ybar4", "ybar5", "ybar6")}


def c3_threshold(y, beta, x_bar):
    """Cost at which h reaches the cap while l > 0; None for a complex radicand."""
    x = _xb(x_bar)
    disc = (y + 1 - beta * (1 - x)) ** 2 - 4 * x * y
    if disc < 0:
        return None
    if beta == y:
        return c2_threshold(y, beta, x)
    return (1 - y) / 2 + (1 - y) * (1 - x * beta - math.sqrt(disc)) / (2 * (beta - y))


def c2_threshold(y, beta, x_bar):
    x = _xb(x_bar)
    return beta * (1 - x) * (1 - y) / (beta - x * (beta - (1 - beta) * y))


def ybar4(c, beta):
    rad = 4 + c - 4 * beta + 4 * beta ** 2 * c - 4 * beta * c
    if rad < 0:
        return None
    return 0.5 * (2 + c - math.sqrt(c) * math.sqrt(rad) - 2 * beta * c)


def ybar5(c, beta, x_bar):
    x = _xb(x_bar)
    D = beta - 2 * beta * c + 2 * c - beta * x + x - 2
    rad = (3 - beta - c + beta * x - x) ** 2 + 4 * (1 - beta * c) * D
    if rad < 0 or D == 0:
        return None
    return (c - beta * x + x - 3 + beta + math.sqrt(rad)) / (2 * D)


def exp_thresholds(c: float, y: float, beta: float, x_bar: float) -> ExpThresholds:
    """All cost and prior thresholds at one parameter point.

    Thresholds with a negative radicand are returned as None and noted.
    """
    x = _xb(x_bar)
    t = ExpThresholds(
        c_bar=1 - y,
        c1=(1 - x) * (1 - y) / (1 - x * y),
        c2=c2_threshold(y, beta, x),
        c3=c3_threshold(y, beta, x),
        c4=beta * (1 - x) ** 2 * (1 - y) / (beta - beta * x + x * y),
        ybar2=1 / (1 + 2 * c),
        ybar3=1 / (2 - x),
        ybar4=ybar4(c, beta),
        ybar5=ybar5(c, beta, x),
        ybar6=(1 - beta + beta * x) / (2 * (1 - beta) * (1 - x) + x),
    )
    for name in ("c3", "ybar4", "ybar5"):
        if getattr(t, name) is None:
            t.notes.append(f"{name}: complex radicand at c={c}, y={y}, beta={beta}, x_bar={x_bar}")
    return t


# -- case rates ------------------------------------------------------------------

def h2(c, y):
    return (1 - y - c) / (1 - y - c * y)


def l4(c, y, beta):
    return (1 - c - y) / (1 - y) * (beta - y) / beta


def h4(c, y, beta):
    return (1 - c - y) / (1 - y) * (1 - (1 - c) * y - c * beta) / (1 - y - c * beta)


def l5(c, y, beta, x_bar):
    x = _xb(x_bar)
    return 1 - c * ((1 - beta) * x * y + beta * (1 - x + y)) / (beta * (c * y + (1 - x) * (1 - y)))


def case_rates(case: str, c, y, beta, x_bar) -> tuple[float, float]:
    x = _xb(x_bar)
    if case == "I":
        return 0.0, 0.0
    if case == "II":
        return 0.0, h2(c, y)
    if case == "III":
        return 0.0, x
    if case == "IV":
        return l4(c, y, beta), h4(c, y, beta)
    if case == "V":
        return l5(c, y, beta, x), x
    if case == "VI":
        return x, x
    raise ValueError(f"unknown case {case!r}")


def case_prior_threshold(case: str, t: ExpThresholds):
    return {"I": 0.5, "II": t.ybar2, "III": t.ybar3, "IV": t.ybar4,
            "V": t.ybar5, "VI": t.ybar6}[case]


# -- classification --------------------------------------------------------------

@dataclass
class RegionClassification:
    case: str  # I..VI, ties as "III|V", or "Invalid"
    structural_case: str  # case from the cost thresholds alone
    l: float
    h: float
    ttr: float
    valid: bool
    thresholds: ExpThresholds
    ties: tuple[str, ...] = ()
    notes: list[str] = field(default_factory=list)


def _structural(c, y, beta, t: ExpThresholds):
    """Case from the cost thresholds plus any case tied at a boundary."""
    def near(a):
        return a is not None and abs(c - a) <= TIE_TOL * max(1.0, abs(a))

    if c >= t.c_bar:
        return "I", (("II",) if y >= beta else ("IV",)) if near(t.c_bar) else ()
    if y >= beta:
        if c > t.c1:
            return "II", ()
        if c >= t.c2:
            tie = ("II",) if near(t.c1) else ("V",) if near(t.c2) else ()
            return "III", tie
        if c > t.c4:
            return "V", ()
        return "VI", ("V",) if near(t.c4) else ()
    if t.c3 is None:
        raise ArithmeticError(f"c3 undefined for y={y} < beta={beta}")
    if c > t.c3:
        return "IV", ()
    if c > t.c4:
        return "V", ("IV",) if near(t.c3) else ()
    return "VI", ("V",) if near(t.c4) else ()


def _literal_cases(c, y, beta, t: ExpThresholds) -> list[str]:
    """Cases whose conditions hold when the summary list is read verbatim."""
    ge = lambda a, b: b is not None and a >= b  # noqa: E731
    out = []
    if c >= t.c_bar:
        out.append("I")
    if c < t.c_bar and y >= beta:
        if c > t.c1 and y >= t.ybar2:
            out.append("II")
        if c <= t.c1 and ge(y, t.ybar3):
            out.append("III")
    if c < t.c_bar and y < beta:
        if c > t.c2 and ge(y, t.ybar4):
            out.append("IV")
        if t.c3 is not None and t.c3 <= c < t.c4 and ge(y, t.ybar5):
            out.append("V")
        if c <= t.c4 and ge(y, t.ybar6):
            out.append("VI")
    return out


def classify_and_solve(c: float, y: float, beta: float, x_bar: float) -> RegionClassification:
    """Case, closed-form rates and ratio at one (c, y, beta, x_bar) point.

    The case follows the threshold ordering in the module docstring. When the
    verbatim summary conditions select no case or several, that is recorded in
    `notes`. Points failing their case's prior threshold are labelled Invalid;
    their structural case and rates are still returned.
    """
    if not 0.5 < y < 1:
        raise ValueError(f"y must lie in (0.5, 1), got {y}")
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if c < 0:
        raise ValueError("c must be >= 0")
    t = exp_thresholds(c, y, beta, x_bar)
    case, ties = _structural(c, y, beta, t)
    l, h = case_rates(case, c, y, beta, x_bar)
    ybar = case_prior_threshold(case, t)
    valid = ybar is not None and y >= ybar
    notes = list(t.notes)
    literal = _literal_cases(c, y, beta, t)
    if len(literal) != 1:
        notes.append(f"summary conditions select {literal or 'no case'}; using {case}")
    elif valid and literal[0] != case:
        notes.append(f"summary conditions select {literal[0]}; using {case}")
    label = "|".join((case,) + ties) if valid else "Invalid"
    return RegionClassification(label, case, l, h, truth_to_rumor(l, h, beta), valid, t,
                                ties, notes)


def ttr_case_v(c: float, y: float, beta: float, x_bar: float) -> tuple[float, int]:
    """Ratio in case V and the sign of its derivative in beta.

    The ratio is affine in beta with slope 2((1-y)(1-x_bar) - c) / den, so the
    sign is positive iff y < (1 - c - x_bar) / (1 - x_bar).
    """
    rc = classify_and_solve(c, y, beta, x_bar)
    if rc.structural_case != "V":
        raise ValueError(f"point is in case {rc.structural_case}, not V")
    x = _xb(x_bar)
    den = (1 - x) * (1 - y) + c * y
    slope_num = (1 - y) * (1 - x) - c
    ratio = ((1 + x) * (1 - y) + c * y + 2 * beta * slope_num) / den
    sign = 0 if abs(slope_num) <= 1e-12 else int(math.copysign(1, slope_num))
    return ratio, sign


# -- grids -------------------------------------------------------------------------

def threshold_distance(c: float, y: float, beta: float, x_bar: float) -> float:
    """Distance from (c, y) to the nearest cost or prior threshold (or y = beta)."""
    t = exp_thresholds(c, y, beta, x_bar)
    d = [abs(y - beta)]
    d += [abs(c - v) for v in (t.c_bar, t.c1, t.c2, t.c3, t.c4) if v is not None]
    d += [abs(y - v) for v in (t.ybar2, t.ybar3, t.ybar4, t.ybar5, t.ybar6) if v is not None]
    return min(d)


def region_grid(c, y, beta: float, x_bar: float) -> dict[str, np.ndarray]:
    """classify_and_solve over matching 1-D arrays of c and y."""
    c = np.asarray(c, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    rows = [classify_and_solve(ci, yi, beta, x_bar) for ci, yi in zip(c, y)]
    return {
        "case": np.array([r.case for r in rows]),
        "structural_case": np.array([r.structural_case for r in rows]),
        "l": np.array([r.l for r in rows]),
        "h": np.array([r.h for r in rows]),
        "ttr": np.array([r.ttr for r in rows]),
        "valid": np.array([r.valid for r in rows]),
        "boundary": np.array([threshold_distance(ci, yi, beta, x_bar) < 1e-3
                              for ci, yi in zip(c, y)]),
    }
