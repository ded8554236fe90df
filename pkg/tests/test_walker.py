import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from rwrelab.environment import Dirichlet, QuenchedEnvironment, Uniform
from rwrelab.lattice import BoxSpec, direction_matrix
from rwrelab.walker import (RegionError, binomial_se, detect_stopping_times,
                            exact_exit_distribution, run_until_exit, simulate_exits, step,
                            walk_path)


class FixedEnv:
    """Same distribution at every site."""

    def __init__(self, p):
        self.p = np.asarray(p, dtype=float)
        self.d = self.p.size // 2

    def site(self, x):
        from rwrelab.environment import SiteDistribution
        return SiteDistribution(self.p)

    def probs_at(self, sites):
        return np.tile(self.p, (len(np.asarray(sites).reshape(-1, self.d)), 1))


def _step_counts(env, n, seed):
    rng = np.random.default_rng(seed)
    counts = np.zeros(4)
    for _ in range(n):
        _, j = step(env, (0, 0), rng)
        counts[j] += 1
    return counts


def test_step_biased_frequency():
    eps = 0.05
    env = FixedEnv([1 - 3 * eps, eps, eps, eps])
    counts = _step_counts(env, 10**5, 1)
    p = 1 - 3 * eps
    assert abs(counts[0] / 1e5 - p) < 3 * binomial_se(p, 10**5)


def test_step_uniform_frequency():
    counts = _step_counts(FixedEnv([0.25] * 4), 10**5, 2)
    se = binomial_se(0.25, 10**5)
    assert np.all(np.abs(counts / 1e5 - 0.25) < 3 * se)


def test_step_determinism():
    env = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), 3)
    a = step(env, (2, 2), np.random.default_rng(9))
    b = step(env, (2, 2), np.random.default_rng(9))
    assert a == b


def test_run_until_exit_single_site():
    env = QuenchedEnvironment(Uniform(), 0)
    traj, ex = run_until_exit(env, (0, 0), lambda x: x == (0, 0), 10, np.random.default_rng(0))
    assert len(traj) == 1 and sum(abs(v) for v in ex) == 1 and not traj.horizon_hit


def test_run_until_exit_censored():
    env = QuenchedEnvironment(Uniform(), 0)
    traj, ex = run_until_exit(env, (0, 0), lambda x: True, 50, np.random.default_rng(0))
    assert ex is None and traj.horizon_hit and len(traj) == 50
    pos = traj.positions()
    assert np.all(np.abs(np.diff(pos, axis=0)).sum(axis=1) == 1)


def test_run_until_exit_start_outside():
    env = QuenchedEnvironment(Uniform(), 0)
    with pytest.raises(RegionError):
        run_until_exit(env, (5, 5), lambda x: x == (0, 0), 10, np.random.default_rng(0))


def test_exact_single_site():
    env = QuenchedEnvironment(Dirichlet((1, 2, 3, 4)), 17)
    out = exact_exit_distribution(env, [(0, 0)], (0, 0))
    p = env.site((0, 0)).probs
    for j, e in enumerate(direction_matrix(2)):
        assert out[tuple(e)] == pytest.approx(p[j], abs=1e-15)


def test_exact_dihedral_symmetry():
    env = QuenchedEnvironment(Uniform(), 0)
    region = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]
    out = exact_exit_distribution(env, region, (0, 0))
    assert sum(out.values()) == pytest.approx(1, abs=1e-9)
    for (a, b), p in out.items():
        for img in [(b, a), (-a, b), (a, -b), (-b, -a), (-a, -b), (b, -a), (-b, a)]:
            assert abs(out[img] - p) < 1e-9


def test_exact_solver_cap():
    env = QuenchedEnvironment(Uniform(), 0)
    region = [(i, j) for i in range(10) for j in range(10)]
    with pytest.raises(RegionError):
        exact_exit_distribution(env, region, (0, 0), cap=50)


@given(seed=st.integers(0, 10**6), mask=st.integers(1, 2**16 - 1))
def test_exact_mass_is_one(seed, mask):
    # region: random subset of a 4x4 grid, connected component of its first site
    cells = [(i, j) for i in range(4) for j in range(4) if mask >> (4 * i + j) & 1]
    comp, todo = {cells[0]}, [cells[0]]
    while todo:
        x = todo.pop()
        for e in direction_matrix(2):
            y = (x[0] + int(e[0]), x[1] + int(e[1]))
            if y in cells and y not in comp:
                comp.add(y), todo.append(y)
    env = QuenchedEnvironment(Dirichlet((0.5, 1, 2, 0.3)), seed)
    out = exact_exit_distribution(env, sorted(comp), cells[0])
    vals = np.array(list(out.values()))
    assert np.all(vals >= -1e-15) and abs(vals.sum() - 1) < 1e-9


def test_monte_carlo_matches_exact_box():
    env = QuenchedEnvironment(Uniform(), 0)
    box = BoxSpec((1, 0), 4, 4)
    region = box.bounding_sites()
    exact = exact_exit_distribution(env, region, (0, 0))
    ex, _, cens = simulate_exits(env, region, (0, 0), 10**5, 10**6, 5)
    assert not cens.any()
    keys = sorted(exact)
    counts = {k: 0 for k in keys}
    for x in map(tuple, ex.tolist()):
        counts[x] += 1
    n = 10**5
    for k in keys:
        p = exact[k]
        assert abs(counts[k] / n - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12
    obs = np.array([counts[k] for k in keys])
    exp = np.array([exact[k] for k in keys]) * n
    assert stats.chisquare(obs, exp).pvalue > 0.001


def test_chi_square_battery_dirichlet():
    region = BoxSpec((1, 0), 3, 3).bounding_sites()
    for seed in range(3):
        env = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), 100 + seed)
        exact = exact_exit_distribution(env, region, (0, 0))
        keys = sorted(exact)
        ex, _, _ = simulate_exits(env, region, (0, 0), 10**5, 10**6, seed)
        idx = {k: i for i, k in enumerate(keys)}
        obs = np.bincount([idx[tuple(x)] for x in ex.tolist()], minlength=len(keys))
        assert stats.chisquare(obs, np.array([exact[k] for k in keys]) * 10**5).pvalue > 0.001


def test_stopping_times_monotone_path():
    pos = np.array([[t, 0] for t in range(10)])
    st_ = detect_stopping_times(pos, (1, 0), levels=[0.5, 2.0, 3.3])
    assert st_.level_times == {0.5: 1, 2.0: 2, 3.3: 4}
    assert st_.backtrack_time is None


def test_stopping_times_backtrack_and_zigzag():
    assert detect_stopping_times([[0, 0], [-1, 0], [0, 0]], (1, 0)).backtrack_time == 1
    zz = detect_stopping_times([[0, 0], [1, 0], [0, 0], [-1, 0]], (1, 0), levels=[1])
    assert zz.level_times[1.0] == 1 and zz.backtrack_time == 3


def test_backtrack_is_strict():
    # returning to the starting level is not a backtrack; D^l needs X_n . l < X_0 . l
    st_ = detect_stopping_times([[0, 0], [1, 0], [0, 0]], (1, 0), levels=[1])
    assert st_.level_times[1.0] == 1 and st_.backtrack_time is None


def test_stopping_times_exit_time():
    pos = [[0, 0], [1, 0], [2, 0], [3, 0]]
    st_ = detect_stopping_times(pos, (1, 0), region=lambda x: x[0] < 2)
    assert st_.exit_time == 2


@given(steps=st.lists(st.integers(0, 3), min_size=1, max_size=60),
       levels=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6))
def test_stopping_times_order_free_and_idempotent(steps, levels):
    pos = np.vstack([[0, 0], np.cumsum(direction_matrix(2)[steps], axis=0)])
    a = detect_stopping_times(pos, (1, 0), levels=levels, lower_levels=levels)
    b = detect_stopping_times(pos, (1, 0), levels=levels[::-1], lower_levels=levels[::-1])
    assert a == b == detect_stopping_times(pos, (1, 0), levels=levels, lower_levels=levels)
    h = pos[:, 0]
    for u, t in a.level_times.items():
        assert (t is None and np.all(h < u)) or (h[t] >= u and np.all(h[:t] < u))


def test_walk_reproducible_and_nearest_neighbour():
    env = QuenchedEnvironment(Dirichlet((1.5, 0.4, 0.2, 0.4)), 8)
    a = walk_path(env, (0, 0), 5000, 3, 1)
    b = walk_path(QuenchedEnvironment(Dirichlet((1.5, 0.4, 0.2, 0.4)), 8), (0, 0), 5000, 3, 1)
    assert np.array_equal(a, b)
    assert np.all(np.abs(np.diff(a, axis=0)).sum(axis=1) == 1)
    assert not np.array_equal(a, walk_path(env, (0, 0), 5000, 3, 2))


def test_walk_uses_quenched_environment():
    # empirical step frequencies at the origin match omega(0, .)
    env = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), 21)
    p = env.site((0, 0)).probs
    firsts = np.array([walk_path(env, (0, 0), 1, 0, w)[1] for w in range(20000)])
    dirs = direction_matrix(2)
    freq = np.array([np.all(firsts == e, axis=1).mean() for e in dirs])
    assert np.all(np.abs(freq - p) < 4 * np.sqrt(p * (1 - p) / 20000))
