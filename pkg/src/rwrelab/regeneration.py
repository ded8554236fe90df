"""Regeneration times along simulated paths and renewal statistics.

The candidate recursion: M_0 = X_0 . l, S_{k+1} the first time the walk
reaches level M_k + a, R_{k+1} the first time after S_{k+1} it drops below
X_{S_{k+1}} . l, and M_{k+1} the running maximum up to R_{k+1}. The first
S_k with R_k = infinity is tau_1; later taus repeat the recursion from the
previous one. R_k = infinity is unobservable, so a candidate is accepted when
no backtrack happens before the horizon and the walk ends at least
``depth`` ahead of it.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numba as nb
import numpy as np

from .environment import QuenchedEnvironment
from .lattice import as_unit
from .rng import derive_seed
from .tails import (InsufficientData, TailEstimate, TrapTail, dirichlet_trap_survival,  # noqa: F401
                    hill_plot, heavy_tail_diagnostic, pareto_samples, predicted_trap_exponent,
                    tail_exponent, trap_exit_tail)
from .walker import walk_path


@dataclass(frozen=True)
class RegenConfig:
    l: tuple = (1.0, 0.0)
    a: float | None = None
    horizon: int = 100_000
    depth: float | None = None  # confirmation depth Delta, default 50 a

    def __post_init__(self):
        l = tuple(float(v) for v in as_unit(self.l))
        object.__setattr__(self, "l", l)
        d = len(l)
        a = 2 * math.sqrt(d) + 0.5 if self.a is None else float(self.a)
        if not a > 2 * math.sqrt(d):
            raise ValueError(f"a must exceed 2 sqrt(d) = {2 * math.sqrt(d):.4f}, got {a}")
        object.__setattr__(self, "a", a)
        if self.depth is None:
            object.__setattr__(self, "depth", 50.0 * a)
        if not self.depth > 0:
            raise ValueError("confirmation depth must be positive")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def d(self):
        return len(self.l)


@dataclass
class RegenerationRecord:
    times: np.ndarray  # tau_1 < tau_2 < ...
    positions: np.ndarray  # X_{tau_k}, shape (k, d)
    censored_tail: bool  # True when no regeneration could be confirmed
    horizon: int
    depths: np.ndarray  # X_horizon . l - X_tau . l, the confirmation margin of each tau
    candidates_rejected: int = 0  # S_k with no backtrack but too shallow at the horizon
    final_position: np.ndarray | None = None  # X_horizon
    path: np.ndarray | None = field(default=None, repr=False)

    @property
    def gaps(self):
        return np.diff(self.times)

    @property
    def displacement_gaps(self):
        return np.diff(self.positions, axis=0)

    def __len__(self):
        return len(self.times)


@nb.njit(cache=True)
def _next_lower(h):
    """nxt[i] = first j > i with h[j] < h[i], or len(h) if none."""
    n = h.shape[0]
    nxt = np.full(n, n, np.int64)
    stack = np.empty(n, np.int64)
    top = 0
    for j in range(n):
        while top > 0 and h[j] < h[stack[top - 1]]:
            top -= 1
            nxt[stack[top]] = j
        stack[top] = j
        top += 1
    return nxt


@nb.njit(cache=True)
def _regen_times(h, a, depth):
    n = h.shape[0]
    pm = np.empty(n)
    run = -np.inf
    for i in range(n):
        run = max(run, h[i])
        pm[i] = run
    nxt = _next_lower(h)
    out = np.empty(n, np.int64)
    n_out = 0
    rejected = 0
    M = h[0]
    while True:
        S = np.searchsorted(pm, M + a)  # T^l_{M+a}: first time the running max reaches M + a
        if S >= n:
            break
        R = nxt[S]
        if R < n:
            M = pm[R]
            continue
        if h[n - 1] - h[S] < depth:
            rejected += 1
            break
        out[n_out] = S
        n_out += 1
        M = h[S]
    return out[:n_out], rejected


def regenerations_from_path(path, cfg, keep_path=False):
    """RegenerationRecord read off a stored path X_0..X_H."""
    path = np.asarray(path)
    h = path @ np.asarray(cfg.l)
    times, rejected = _regen_times(h.astype(float), float(cfg.a), float(cfg.depth))
    return RegenerationRecord(times, path[times].copy(), len(times) == 0, len(path) - 1,
                              h[-1] - h[times], int(rejected), path[-1].copy(),
                              path if keep_path else None)


def find_regenerations(env, start, cfg, seed, walker_id=0, keep_path=False):
    """Simulate one quenched walk for cfg.horizon steps and extract its regenerations."""
    if env.d != cfg.d:
        raise ValueError("direction and environment dimensions differ")
    path = walk_path(env, start, cfg.horizon, seed, walker_id)
    return regenerations_from_path(path, cfg, keep_path)


def verify_no_backtrack(record, path, l):
    """Exact check that X_n . l >= X_tau . l for every tau and every n in (tau, horizon]."""
    h = np.asarray(path) @ np.asarray(l, dtype=float)
    suffix_min = np.minimum.accumulate(h[::-1])[::-1]
    return bool(np.all(suffix_min[record.times] >= h[record.times]))


def regeneration_battery(law, cfg, n_walks, seed, keep_path=False, threads=1):
    """One walk in its own environment per walker; environment seeds derive from ``seed``.

    Results are ordered by walker id and do not depend on ``threads``.
    """
    def one(w):
        env = QuenchedEnvironment(law, derive_seed(seed, "env", w))
        return find_regenerations(env, np.zeros(cfg.d, np.int64), cfg,
                                  derive_seed(seed, "walk", w), w, keep_path)

    if threads <= 1:
        return [one(w) for w in range(n_walks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(n_walks)))


# ---------------------------------------------------------------- renewal statistics


@dataclass
class RenewalStats:
    velocity: np.ndarray
    velocity_se: np.ndarray
    gap_mean: float
    gap_second_moment: float
    covariance: np.ndarray
    n_gaps: int
    n_records: int

    def to_dict(self):
        return {"velocity": self.velocity.tolist(), "velocity_se": self.velocity_se.tolist(),
                "gap_mean": self.gap_mean, "gap_second_moment": self.gap_second_moment,
                "covariance": self.covariance.tolist(), "n_gaps": self.n_gaps,
                "n_records": self.n_records}


def collect_gaps(records):
    """Time and displacement gaps tau_{k+1} - tau_k, k >= 1, pooled over records."""
    dt, dx = [], []
    for r in records:
        if len(r.times) >= 2:
            dt.append(r.gaps)
            dx.append(r.displacement_gaps)
    if not dt:
        raise InsufficientData("no record holds two regenerations")
    return np.concatenate(dt).astype(float), np.concatenate(dx).astype(float)


def renewal_statistics(records):
    """Velocity sum(dX) / sum(dtau) and covariance E[(dX - v dtau)(.)^T] / E[dtau].

    The first term tau_1 of each record is never used; only the gaps between
    consecutive regenerations, which are i.i.d.
    """
    dt, dx = collect_gaps(records)
    m = dt.size
    v = dx.sum(axis=0) / dt.sum()
    resid = dx - np.outer(dt, v)
    Et = dt.mean()
    cov = resid.T @ resid / m / Et
    # delta method for a ratio of means
    se = resid.std(axis=0, ddof=1) / (Et * math.sqrt(m)) if m > 1 else np.full(v.shape, np.nan)
    return RenewalStats(v, se, float(Et), float(np.mean(dt * dt)), cov, m, len(records))


def split_half_gaps(records):
    """(mean first half, mean second half, combined SE) of the pooled time gaps."""
    dt, _ = collect_gaps(records)
    if dt.size < 4:
        raise InsufficientData("need at least 4 gaps for a split-half comparison")
    h = dt.size // 2
    a, b = dt[:h], dt[h:]
    se = math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    return float(a.mean()), float(b.mean()), se
