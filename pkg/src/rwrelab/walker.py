"""Quenched walks, stopping times and the exact exit-distribution oracle."""

from dataclasses import dataclass
import math

import numba as nb
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import rng as _rng
from .lattice import direction_matrix, outer_boundary

SOLVER_CAP = 20_000


class RegionError(ValueError):
    pass


@dataclass
class Trajectory:
    start: tuple
    steps: np.ndarray  # 0-based direction indices
    horizon_hit: bool

    def positions(self):
        d = len(self.start)
        moves = direction_matrix(d)[self.steps] if len(self.steps) else np.zeros((0, d), np.int64)
        return np.vstack([np.asarray(self.start, np.int64)[None], moves]).cumsum(axis=0)

    def __len__(self):
        return len(self.steps)


def step(env, x, rng):
    """One move from x: x + e with probability omega(x, e)."""
    p = env.site(x).probs
    j = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
    j = min(j, p.size - 1)
    return tuple(int(a + b) for a, b in zip(x, direction_matrix(env.d)[j])), j


def run_until_exit(env, start, region, horizon, rng):
    """Walk until the first time outside ``region`` (a predicate on sites).

    Returns (Trajectory, exit_site), exit_site None when censored at horizon.
    """
    start = tuple(int(v) for v in start)
    if not region(start):
        raise RegionError("start must lie in the region")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    x, steps = start, []
    for _ in range(horizon):
        x, j = step(env, x, rng)
        steps.append(j)
        if not region(x):
            return Trajectory(start, np.array(steps, dtype=np.int64), False), x
    return Trajectory(start, np.array(steps, dtype=np.int64), True), None


# ---------------------------------------------------------------- exact solver


def exact_exit_distribution(env, region, start, cap=SOLVER_CAP):
    """Exit law of the quenched walk from ``start`` out of the finite ``region``.

    Solves the absorbing-chain system with a sparse LU factorisation. Returns
    a dict mapping boundary sites (tuples) to probabilities.
    """
    sites = np.unique(np.asarray(region, dtype=np.int64).reshape(-1, env.d), axis=0)
    n = len(sites)
    if n > cap:
        raise RegionError(f"region has {n} sites, solver cap is {cap}")
    index = {tuple(s): k for k, s in enumerate(sites.tolist())}
    start = tuple(int(v) for v in start)
    if start not in index:
        raise RegionError("start must lie in the region")
    bd = outer_boundary(sites)
    bindex = {tuple(s): k for k, s in enumerate(bd.tolist())}
    probs = env.probs_at(sites)
    dirs = direction_matrix(env.d)

    rows_i, cols_i, vals_i = [], [], []
    rows_b, cols_b, vals_b = [], [], []
    for j, e in enumerate(dirs):
        nb_sites = (sites + e).tolist()
        for k, t in enumerate(nb_sites):
            t = tuple(t)
            if t in index:
                rows_i.append(k), cols_i.append(index[t]), vals_i.append(probs[k, j])
            else:
                rows_b.append(k), cols_b.append(bindex[t]), vals_b.append(probs[k, j])
    P_in = sp.csr_matrix((vals_i, (rows_i, cols_i)), shape=(n, n))
    P_out = sp.csr_matrix((vals_b, (rows_b, cols_b)), shape=(n, len(bd)))
    A = (sp.identity(n, format="csc") - P_in.tocsc()).T.tocsc()
    rhs = np.zeros(n)
    rhs[index[start]] = 1.0
    # green(start, .) solves (I - P)^T g = delta_start
    green = spla.spsolve(A, rhs)
    if not np.all(np.isfinite(green)):
        raise np.linalg.LinAlgError("singular absorbing system")
    exit_p = P_out.T @ green
    return {tuple(s): float(p) for s, p in zip(bd.tolist(), exit_p)}


# ---------------------------------------------------------------- stopping times


@dataclass(frozen=True)
class StoppingTimes:
    """First-passage indices along a trajectory; None means censored."""

    exit_time: int | None
    level_times: dict  # u -> T^l_u
    lower_times: dict  # u -> T~^l_u
    backtrack_time: int | None  # D^l


def detect_stopping_times(positions, l, levels=(), lower_levels=(), region=None):
    """T_A, T^l_u, T~^l_u and D^l read off a stored path (index 0 is X_0)."""
    pos = np.asarray(positions)
    h = pos @ np.asarray(l, dtype=float)

    def first(mask):
        idx = np.flatnonzero(mask)
        return int(idx[0]) if idx.size else None

    exit_time = None
    if region is not None:
        exit_time = first(~np.array([bool(region(tuple(p))) for p in pos.tolist()]))
    up = {float(u): first(h >= u) for u in levels}
    down = {float(u): first(h <= u) for u in lower_levels}
    return StoppingTimes(exit_time, up, down, first(h < h[0]))


# ---------------------------------------------------------------- njit kernels


@nb.njit(cache=True, inline="always")
def _choose_cum(cum, u):
    n = cum.shape[0]
    for j in range(n - 1):
        if u < cum[j]:
            return j
    return n - 1


@nb.njit(cache=True)
def _grid_exits(cum_probs, inside, origin, start, dirs, n_walks, horizon, seed):
    """Walk on a dense grid window; returns exit cell indices (or -1 if censored).

    ``inside`` is a boolean window; cells outside it are absorbing.
    """
    d = dirs.shape[1]
    shape = inside.shape
    strides = np.empty(d, np.int64)
    s = 1
    for k in range(d - 1, -1, -1):
        strides[k] = s
        s *= shape[k]
    flat_inside = inside.ravel()
    out = np.full((n_walks, d), 0, np.int64)
    times = np.full(n_walks, -1, np.int64)
    state = np.empty(1, dtype=np.uint64)
    pos = np.empty(d, np.int64)
    for w in range(n_walks):
        state[0] = _rng.index_key(seed, _rng.WALK_DOMAIN, w)
        for k in range(d):
            pos[k] = start[k] - origin[k]
        t = 0
        while t < horizon:
            cell = 0
            for k in range(d):
                cell += pos[k] * strides[k]
            u = _rng.uniform_open(state)
            j = _choose_cum(cum_probs[cell], u)
            for k in range(d):
                pos[k] += dirs[j, k]
            t += 1
            cell = 0
            for k in range(d):
                cell += pos[k] * strides[k]
            if not flat_inside[cell]:
                times[w] = t
                break
        for k in range(d):
            out[w, k] = pos[k] + origin[k]
    return out, times


def simulate_exits(env, region, start, n_walks, horizon, seed):
    """Monte Carlo exits of n_walks quenched walks from a finite region.

    Returns (exit_sites (n, d), exit_times (n,), censored mask).
    """
    sites = np.unique(np.asarray(region, dtype=np.int64).reshape(-1, env.d), axis=0)
    start = np.asarray(start, dtype=np.int64)
    lo = sites.min(axis=0) - 1
    hi = sites.max(axis=0) + 1
    shape = tuple(int(v) for v in hi - lo + 1)
    inside = np.zeros(shape, dtype=np.bool_)
    inside[tuple((sites - lo).T)] = True
    if not inside[tuple(start - lo)]:
        raise RegionError("start must lie in the region")
    probs = np.full(shape + (2 * env.d,), 1.0 / (2 * env.d))
    probs[tuple((sites - lo).T)] = env.probs_at(sites)
    cum = np.cumsum(probs.reshape(-1, 2 * env.d), axis=1)
    ex, times = _grid_exits(cum, inside, lo, start, direction_matrix(env.d), int(n_walks),
                            int(horizon), np.uint64(seed))
    return ex, times, times < 0


@nb.njit(cache=True, nogil=True)
def _walk_path(law, params, d, env_seed, walker_seed, start, n_steps, dirs):
    pos = np.empty((n_steps + 1, d), np.int64)
    pos[0] = start
    state = np.empty(1, dtype=np.uint64)
    state[0] = walker_seed
    p = np.empty(2 * d)
    x = start.copy()
    for t in range(n_steps):
        _rng.site_probs(law, params, d, env_seed, x, p)
        j = _choose_raw(p, _rng.uniform_open(state))
        for k in range(d):
            x[k] += dirs[j, k]
        pos[t + 1] = x
    return pos


@nb.njit(cache=True, inline="always")
def _choose_raw(p, u):
    acc = 0.0
    n = p.shape[0]
    for j in range(n - 1):
        acc += p[j]
        if u < acc:
            return j
    return n - 1


def walker_seed(seed, walker_id):
    return np.uint64(_rng.index_key(np.uint64(seed), _rng.WALK_DOMAIN, int(walker_id)))


def walk_path(env, start, n_steps, seed, walker_id=0):
    """Positions X_0..X_n of one quenched walk, as an (n + 1, d) array.

    The walker stream is keyed by (seed, walker_id) and is independent of the
    environment stream.
    """
    start = np.asarray(start, dtype=np.int64)
    return _walk_path(env.law.code, env.law.params(), env.d, env.seed64,
                      walker_seed(seed, walker_id), start, int(n_steps), direction_matrix(env.d))


@nb.njit(cache=True)
def _annealed_box_exits(law, params, d, env_seed, walk_seed, rot, half, n_walks, horizon, dirs,
                        tol):
    """Each walk gets its own environment; exit when a rotated coordinate leaves the box."""
    out = np.zeros((n_walks, d), np.int64)
    times = np.full(n_walks, -1, np.int64)
    state = np.empty(1, dtype=np.uint64)
    p = np.empty(2 * d)
    x = np.zeros(d, np.int64)
    for w in range(n_walks):
        es = _rng.index_key(env_seed, _rng.ENV_DOMAIN, w)
        state[0] = _rng.index_key(walk_seed, _rng.WALK_DOMAIN, w)
        for k in range(d):
            x[k] = 0
        t = 0
        while t < horizon:
            _rng.site_probs(law, params, d, es, x, p)
            j = _choose_raw(p, _rng.uniform_open(state))
            for k in range(d):
                x[k] += dirs[j, k]
            t += 1
            outside = False
            for c in range(d):
                y = 0.0
                for k in range(d):
                    y += rot[k, c] * x[k]
                if not abs(y) < half[c] - tol:
                    outside = True
                    break
            if outside:
                times[w] = t
                break
        for k in range(d):
            out[w, k] = x[k]
    return out, times


def annealed_box_exits(law, box, n_walks, horizon, seed):
    """Exits of n_walks annealed walks from 0 out of a BoxSpec (fresh environment per walk)."""
    from .lattice import FACE_TOL

    half = np.full(box.d, float(box.L_tilde))
    half[0] = box.L
    env_seed = np.uint64(_rng.index_key(np.uint64(seed), _rng.ENV_DOMAIN, 0))
    ex, times = _annealed_box_exits(law.code, law.params(), law.d, env_seed, np.uint64(seed),
                                    np.ascontiguousarray(box.rotation), half, int(n_walks),
                                    int(horizon), direction_matrix(law.d), FACE_TOL)
    return ex, times, times < 0


def annealed_env_seed(seed, walk):
    """The environment label used for walk number ``walk`` by annealed_box_exits."""
    env_seed = np.uint64(_rng.index_key(np.uint64(seed), _rng.ENV_DOMAIN, 0))
    return int(_rng.index_key(env_seed, _rng.ENV_DOMAIN, walk))


@nb.njit(cache=True)
def _many_endpoints(law, params, d, master, n_walks, checkpoints, dirs):
    """X_t at each checkpoint for n_walks annealed walks (fresh env per walk)."""
    out = np.zeros((n_walks, checkpoints.shape[0], d), np.int64)
    state = np.empty(1, dtype=np.uint64)
    p = np.empty(2 * d)
    x = np.zeros(d, np.int64)
    for w in range(n_walks):
        es = _rng.index_key(master, _rng.ENV_DOMAIN, w)
        state[0] = _rng.index_key(master, _rng.WALK_DOMAIN, w)
        for k in range(d):
            x[k] = 0
        t = 0
        for c in range(checkpoints.shape[0]):
            while t < checkpoints[c]:
                _rng.site_probs(law, params, d, es, x, p)
                j = _choose_raw(p, _rng.uniform_open(state))
                for k in range(d):
                    x[k] += dirs[j, k]
                t += 1
            out[w, c] = x
    return out


def annealed_positions(law, n_walks, checkpoints, seed):
    """X_t for t in ``checkpoints`` over n_walks walks, one environment per walk."""
    cps = np.asarray(sorted(int(c) for c in checkpoints), dtype=np.int64)
    return _many_endpoints(law.code, law.params(), law.d, np.uint64(seed), int(n_walks), cps,
                           direction_matrix(law.d))


def binomial_se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)
