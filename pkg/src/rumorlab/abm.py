"""Finite-population agent-based simulation of the diffusion process.

Agents 0..N/2-1 have bias 0 (the true state), the rest bias 1. Opinions are
coded -1 (susceptible), 0 or 1. In each step of length dt every susceptible
agent has k meetings; each meeting transmits with probability nu*dt, and the
partner is drawn uniformly, with replacement, from the agent's own group with
probability beta and from the other group otherwise. The first meeting with
an informed partner is the message received. Informed agents die with
probability delta*dt and are replaced by susceptible agents of the same type.
All updates use the state at the start of the step.

Random numbers come from numpy's PCG64 generator seeded with the run seed.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_SEED, PrevalenceState
from .model import ModelParams

log = logging.getLogger(__name__)

SUSCEPTIBLE = -1


@dataclass
class AbmRun:
    seed: int
    t: np.ndarray
    rho0: np.ndarray
    rho1: np.ndarray
    iota: np.ndarray
    rumor0: np.ndarray  # rumor holders among bias-0 agents, always zero


def _initial_opinions(N, init: PrevalenceState, rng):
    half = N // 2
    op = np.full(N, SUSCEPTIBLE, dtype=np.int8)
    n00 = int(round(init.rho00 * half))
    n01 = int(round(init.rho01 * half))
    n11 = int(round(init.rho11 * half))
    op[rng.choice(half, n00, replace=False)] = 0
    grp1 = half + rng.choice(half, n01 + n11, replace=False)
    op[grp1[:n01]] = 0
    op[grp1[n01:]] = 1
    return op


def simulate(params: ModelParams, l: float, h: float, N: int = 20_000, dt: float = 0.25,
             horizon: float = 400.0, seed: int = 0, record_every: int = 4,
             init: PrevalenceState = DEFAULT_SEED) -> AbmRun:
    """One stochastic run; prevalences are population shares."""
    if N % 2 or N < 2:
        raise ValueError(f"N must be a positive even number, got {N}")
    if N < 1000:
        log.warning("N=%d < 1000: mean-field comparison unreliable", N)
    params.check_step(dt, limit=0.1)
    for name, v in (("l", l), ("h", h)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")

    rng = np.random.default_rng(seed)
    half = N // 2
    k, beta = params.k, params.beta
    p_contact, p_death = params.nu * dt, params.delta * dt
    btype = (np.arange(N) >= half).astype(np.int64)
    partisan = np.zeros(N, dtype=bool)
    n_part = int(round(params.gamma * half))
    partisan[:n_part] = True
    partisan[half:half + n_part] = True
    op = _initial_opinions(N, init, rng)

    n_steps = int(math.ceil(horizon / dt))
    n_rec = n_steps // record_every + 1
    out = np.empty((n_rec, 4))
    ts = np.empty(n_rec)

    def record(i, step):
        ts[i] = step * dt
        n0 = np.count_nonzero(op == 0)
        n1 = np.count_nonzero(op == 1)
        out[i] = (n0 / N, n1 / N, (n0 + n1) / N, np.count_nonzero(op[:half] == 1) / N)

    record(0, 0)
    rec = 1
    for step in range(1, n_steps + 1):
        informed = op >= 0
        sus = np.flatnonzero(~informed)
        dies = informed & (rng.random(N) < p_death)

        new_op = op.copy()
        contact = rng.random((sus.size, k)) < p_contact
        rows, _ = np.nonzero(contact)  # row-major, so meetings are in order
        if rows.size:
            agent = sus[rows]
            same = rng.random(rows.size) < beta
            ptype = np.where(same, btype[agent], 1 - btype[agent])
            partner = ptype * half + rng.integers(0, half, rows.size)
            msg = op[partner]
            hit = msg >= 0
            first_rows, first = np.unique(rows[hit], return_index=True)
            if first_rows.size:
                recv = sus[first_rows]
                m = msg[hit][first]
                # bias-0 agents always end with opinion 0; partisans keep bias 1
                rate = np.where(m == 1, l, h)
                verified = rng.random(recv.size) < rate
                res = np.where(verified | (btype[recv] == 0), 0, 1)
                res[partisan[recv] & (btype[recv] == 1)] = 1
                new_op[recv] = res
        new_op[dies] = SUSCEPTIBLE
        op = new_op
        if step % record_every == 0:
            record(rec, step)
            rec += 1
    if rec < n_rec:
        out, ts = out[:rec], ts[:rec]
    return AbmRun(seed, ts, out[:, 0], out[:, 1], out[:, 2], out[:, 3])


@dataclass
class AbmResult:
    t: np.ndarray
    runs: list[AbmRun]

    def _stack(self, name):
        return np.vstack([getattr(r, name) for r in self.runs])

    def mean(self, name: str) -> np.ndarray:
        return self._stack(name).mean(axis=0)

    def std(self, name: str) -> np.ndarray:
        x = self._stack(name)
        return x.std(axis=0, ddof=1) if len(self.runs) > 1 else np.zeros(x.shape[1])

    def band(self, name: str, z: float = 1.96) -> tuple[np.ndarray, np.ndarray]:
        """Normal-approximation confidence band for the across-seed mean."""
        m = self.mean(name)
        half = z * self.std(name) / math.sqrt(len(self.runs))
        return m - half, m + half

    def terminal(self, name: str, window: float = 0.25) -> np.ndarray:
        """Per-seed time average over the final `window` fraction of the run."""
        x = self._stack(name)
        start = int(len(self.t) * (1 - window))
        return x[:, start:].mean(axis=1)

    def terminal_ratio(self, window: float = 0.25) -> np.ndarray:
        return self.terminal("rho0", window) / self.terminal("rho1", window)


def _simulate_kw(kw):
    return simulate(**kw)


def run_abm(params: ModelParams, l: float, h: float, N: int = 20_000, dt: float = 0.25,
            horizon: float = 400.0, seeds=(0,), record_every: int = 4,
            init: PrevalenceState = DEFAULT_SEED, workers: int = 1) -> AbmResult:
    """Independent runs for each seed, optionally in a process pool."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    jobs = [dict(params=params, l=l, h=h, N=N, dt=dt, horizon=horizon, seed=s,
                 record_every=record_every, init=init) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_simulate_kw, jobs))
    else:
        runs = [simulate(**kw) for kw in jobs]
    return AbmResult(runs[0].t, runs)
