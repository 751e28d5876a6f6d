"""CSV and PPM writers with fixed column orders."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

TRAJECTORY_COLUMNS = ("t", "rho00", "rho01", "rho11", "rho0", "rho1", "iota")
SOLUTION_COLUMNS = ("y", "c", "beta", "gamma", "xbar", "l", "h", "kind", "ttr", "L", "H",
                    "cond_y_ok", "residual", "multiplicity")
SWEEP_COLUMNS = SOLUTION_COLUMNS + ("lam", "k", "nu", "delta", "error")
REGION_COLUMNS = ("c", "y", "beta", "xbar", "case", "l", "h", "ttr",
                  "solver_case", "solver_l", "solver_h", "boundary", "agree")
ABM_COLUMNS = ("t", "rho0", "rho1", "iota", "seed")
ABM_SUMMARY_COLUMNS = ("t", "rho0_mean", "rho0_std", "rho1_mean", "rho1_std",
                       "iota_mean", "iota_std", "n_seeds")
STEADY_COLUMNS = ("k", "nu", "delta", "beta", "lam", "l", "h", "iota", "rho0", "rho1", "ttr",
                  "stability")
PARTISAN_COLUMNS = ("gamma", "l", "h", "l_eff", "h_eff", "rho0", "rho1", "ttr", "cap_violation")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(rows: Iterable[Mapping | Sequence], columns: Sequence[str], dest=None) -> str | None:
    """Write rows (mappings or sequences) with a header, LF line endings, UTF-8.

    `dest` is a path, a text stream, or None to return the text.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, Mapping):
            row = [row.get(col) for col in columns]
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if dest is None:
        return text
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8", newline="\n")
    else:
        dest.write(text)
    return None


def read_csv(path_or_text) -> list[dict[str, str]]:
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str)
                                          and "\n" not in path_or_text):
        path_or_text = Path(path_or_text).read_text(encoding="utf-8")
    return list(csv.DictReader(io.StringIO(path_or_text)))


def solution_row(sol, params, x_bar: float) -> dict:
    return {
        "y": params.y, "c": params.c, "beta": params.beta, "gamma": params.gamma,
        "xbar": x_bar, "l": sol.l, "h": sol.h, "kind": str(sol.kind), "ttr": sol.ttr,
        "L": sol.L, "H": sol.H, "cond_y_ok": sol.cond_y_ok, "residual": sol.residual,
        "multiplicity": sol.n_solutions,
    }


def trajectory_rows(traj):
    agg = traj.aggregates()
    for t, s, a in zip(traj.t, traj.states, agg):
        yield (t, *s[:3], *a) if traj.gamma is None else (t, s[0], *s[2:4], *a)


# distinct colours for I..VI and Invalid
PALETTE = {
    "I": (255, 255, 255), "II": (31, 119, 180), "III": (255, 127, 14), "IV": (44, 160, 44),
    "V": (214, 39, 40), "VI": (148, 103, 189), "Invalid": (200, 200, 200),
}


def write_ppm(labels: np.ndarray, dest, palette: Mapping[str, tuple] = PALETTE) -> None:
    """Binary PPM (P6) with one pixel per cell.

    `labels` has shape (ny, nx) with y increasing along axis 0; the image is
    flipped so that y increases upwards. Tied labels such as "III|V" take the
    colour of their first case.
    """
    labels = np.asarray(labels)
    ny, nx = labels.shape
    img = np.zeros((ny, nx, 3), dtype=np.uint8)
    for i in range(ny):
        for j in range(nx):
            img[ny - 1 - i, j] = palette.get(str(labels[i, j]).split("|")[0], (0, 0, 0))
    header = f"P6\n{nx} {ny}\n255\n".encode("ascii")
    Path(dest).write_bytes(header + img.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    nx, ny = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(ny, nx, 3)
