"""Heavy-tail exponent estimators and the two-site trap survival curve."""

from dataclasses import dataclass, field, asdict
import math

import numpy as np
from scipy.special import gammaln

from .environment import Dirichlet, iid_sites
from .rng import derive_seed


class InsufficientData(ValueError):
    pass


@dataclass
class TailEstimate:
    exponent: float
    standard_error: float
    method: str  # "hill" or "loglog_regression"
    k_fraction: float | None = None
    grid: list | None = None
    censored_count: int = 0
    n_samples: int = 0
    heavy_tail: bool | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = asdict(self)
        if out["grid"] is not None:
            out["grid"] = [float(u) for u in out["grid"]]
        return out


def _clean(samples, censored):
    x = np.asarray(samples, dtype=float).ravel()
    c = np.zeros(x.shape, bool) if censored is None else np.asarray(censored, bool).ravel()
    if c.shape != x.shape:
        raise ValueError("censoring flags must match the samples")
    if np.any(~(x > 0)):
        raise ValueError("tail samples must be positive")
    if x.size == 0 or np.all(x == x[0]):
        raise InsufficientData("samples are constant; no tail to estimate")
    return x, c


def hill_at(x, c, k):
    """Censored Hill estimate and its SE from the top k order statistics.

    alpha = p_k / H_k with H_k the mean log-excess over X_(k+1) and p_k the
    uncensored fraction among the top k (p_k = 1 without censoring).
    """
    order = np.argsort(x)[::-1]
    xs, cs = x[order], c[order]
    if not 1 <= k < xs.size:
        raise InsufficientData(f"need 1 <= k < N, got k={k}, N={xs.size}")
    H = float(np.mean(np.log(xs[:k]) - math.log(xs[k])))
    if H <= 0:
        raise InsufficientData("top order statistics are tied")
    p = 1.0 - float(cs[:k].mean())
    alpha = p / H
    return alpha, alpha / math.sqrt(k)


def hill_plot(samples, censored=None, ks=None):
    """(k, alpha_k, se_k) rows over a log-spaced k grid: the sensitivity sweep."""
    x, c = _clean(samples, censored)
    n = x.size
    if ks is None:
        ks = np.unique(np.geomspace(10, max(11, n // 2), 40).astype(int))
    rows = []
    for k in ks:
        if 1 <= k < n:
            a, s = hill_at(x, c, int(k))
            rows.append((int(k), a, s))
    return rows


def heavy_tail_diagnostic(samples, censored=None):
    """False when Hill estimates drift with k or exceed 10 (light tail), else True.

    Drift compares k = N^0.4 against k = N^0.8 in units of their combined SE.
    """
    x, c = _clean(samples, censored)
    n = x.size
    k_lo, k_hi = max(10, int(n ** 0.4)), min(n - 1, int(n ** 0.8))
    a_lo, s_lo = hill_at(x, c, k_lo)
    a_hi, s_hi = hill_at(x, c, k_hi)
    a_mid, _ = hill_at(x, c, min(n - 1, math.ceil(n ** 0.6)))
    z = abs(a_lo - a_hi) / math.hypot(s_lo, s_hi)
    return bool(a_mid <= 10 and z <= 4), {"hill_k_low": a_lo, "hill_k_high": a_hi, "drift_z": z}


def _survival(x, u):
    xs = np.sort(x)
    return 1.0 - np.searchsorted(xs, u, side="right") / xs.size


def _slope(lu, ls):
    A = np.vstack([lu, np.ones_like(lu)]).T
    return float(np.linalg.lstsq(A, ls, rcond=None)[0][0])


def tail_exponent(samples, censored=None, method="hill", k=None, grid=None, horizon=None,
                  n_boot=200, seed=0, min_hill=1000):
    """Tail index alpha of P(X > u) ~ u^(-alpha).

    ``hill``: censored Hill on the top k = ceil(N^0.6) order statistics, SE
    alpha / sqrt(k). ``loglog``: least-squares slope of log empirical survival
    against log u on ``grid`` (default 30 log-spaced points from the 0.9
    quantile to the point with 100 exceedances), restricted below the
    censoring ``horizon``; SE by bootstrap.
    """
    x, c = _clean(samples, censored)
    n = x.size
    n_cens = int(c.sum())
    if method == "hill":
        if n - n_cens < min_hill:
            raise InsufficientData(f"Hill needs >= {min_hill} uncensored samples, got {n - n_cens}")
        k = min(n - 1, math.ceil(n ** 0.6)) if k is None else int(k)
        a, s = hill_at(x, c, k)
        heavy, diag = heavy_tail_diagnostic(x, c)
        return TailEstimate(a, s, "hill", k / n, None, n_cens, n, heavy, diag)
    if method not in ("loglog", "loglog_regression"):
        raise ValueError(f"unknown method {method!r}")
    if horizon is None and n_cens:
        horizon = float(x[c].min())
    if grid is None:
        top = np.sort(x)[-min(n - 1, 100)]
        lo = np.quantile(x, 0.9)
        if horizon is not None:
            top = min(top, horizon * (1 - 1e-12))
        if not top > lo:
            raise InsufficientData("no room for a regression grid in the tail")
        grid = np.geomspace(lo, top, 30)
    grid = np.asarray(grid, dtype=float)
    if horizon is not None:
        grid = grid[grid < horizon]
    S = _survival(x, grid)
    keep = S > 0
    if keep.sum() < 3:
        raise InsufficientData("fewer than 3 grid points with positive survival")
    grid = grid[keep]
    lu = np.log(grid)
    alpha = -_slope(lu, np.log(S[keep]))
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_boot):
        xb = x[rng.integers(0, n, n)]
        Sb = _survival(xb, grid)
        if np.all(Sb > 0):
            boots.append(-_slope(lu, np.log(Sb)))
    se = float(np.std(boots, ddof=1)) if len(boots) > 1 else float("nan")
    heavy = None
    if n - n_cens >= 100:
        heavy, _ = heavy_tail_diagnostic(x, c)
    return TailEstimate(alpha, se, "loglog_regression", None, list(grid), n_cens, n, heavy)


def pareto_samples(alpha, n, seed, x_min=1.0):
    """Inverse-CDF Pareto(alpha): X = x_min U^(-1/alpha)."""
    u = np.random.default_rng(seed).random(n)
    u = np.where(u == 0, np.finfo(float).tiny, u)
    return x_min * u ** (-1.0 / alpha)


# ---------------------------------------------------------------- two-site trap


@dataclass
class TrapTail:
    n_grid: np.ndarray
    survival: np.ndarray  # annealed P(T_K > n), exact per environment then averaged
    paired_survival: np.ndarray  # same average but with (a, b) kept paired per draw
    n_at_risk: np.ndarray  # simulated trap walks (one per environment) with T_K > n
    walk_survival: np.ndarray  # n_at_risk / N
    estimate: TailEstimate
    predicted_exponent: float | None
    closed_form_survival: np.ndarray | None
    closed_form_exponent: float | None

    def csv_rows(self):
        return [(int(u), float(s), int(r)) for u, s, r in zip(self.n_grid, self.survival,
                                                               self.n_at_risk)]


def quenched_trap_log_survival(a, b, n):
    """log P_omega(T_K > n) = ceil(n/2) log a + floor(n/2) log b, K = {0, e0}."""
    n = np.asarray(n)
    return np.ceil(n / 2) * np.log(a) + np.floor(n / 2) * np.log(b)


def _moment_curve(log_w, m):
    """mean_i w_i^m for each m, computed stably in log space."""
    out = np.empty(len(m))
    for j, mm in enumerate(m):
        t = mm * log_w
        top = t.max()
        out[j] = math.exp(top) * np.mean(np.exp(t - top))
    return out


def _annealed(log_a, log_b, n):
    up, down = np.ceil(n / 2), np.floor(n / 2)
    return _moment_curve(log_a, up) * _moment_curve(log_b, down)


def dirichlet_trap_survival(beta, e0, n):
    """Closed form: E[a^m] E[b^m'] with a ~ Beta(beta_e0, S - beta_e0) and likewise b."""
    beta = np.asarray(beta, dtype=float)
    d = beta.size // 2
    S = beta.sum()
    p, q = beta[e0], beta[(e0 + d) % (2 * d)]
    n = np.asarray(n, dtype=float)
    up, down = np.ceil(n / 2), np.floor(n / 2)

    def log_moment(shape, m):
        return gammaln(shape + m) + gammaln(S) - gammaln(shape) - gammaln(S + m)

    return np.exp(log_moment(p, up) + log_moment(q, down))


def predicted_trap_exponent(beta, e0):
    beta = np.asarray(beta, dtype=float)
    d = beta.size // 2
    return float(2 * beta.sum() - beta[e0] - beta[(e0 + d) % (2 * d)])


def _sample_trap_times(a, b, rng):
    # M full returns 0 -> e0 -> 0 are geometric with P(M >= m) = (ab)^m
    u = rng.random(a.size)
    u = np.where(u == 0, np.finfo(float).tiny, u)
    lab = np.log(a) + np.log(b)
    M = np.floor(np.minimum(np.log(u) / lab, 1e17))
    second = rng.random(a.size) < a * (1 - b) / (1 - a * b)
    return 2 * M + np.where(second, 2, 1)


def _ess_limit(log_w, min_ess):
    """Largest power m (on a doubling grid) with effective sample size of w^m >= min_ess."""
    m, best = 1.0, 1.0
    while m < 1e8:
        t = m * log_w
        w = np.exp(t - t.max())
        if w.sum() ** 2 / (w * w).sum() < min_ess:
            break
        best = m
        m *= 1.25
    return best


def trap_exit_tail(law, e0=0, n_grid=None, n_samples=10 ** 6, seed=0, fit_range=(1e2, 1e4),
                   n_batches=20, min_ess=100):
    """Annealed survival of the two-site trap K = {0, e0} and its log-log exponent.

    For every environment draw a = omega(0, e0) and b = omega(e0, -e0), the
    quenched survival is exact. The two sites are independent under the law,
    so the annealed curve is formed as mean(a^ceil(n/2)) * mean(b^floor(n/2)),
    i.e. averaging over all N^2 pairings of the independent site draws; this
    resolves the rare near-one draws that carry the tail. The fit window is
    cut back where either moment average has effective sample size below
    ``min_ess``. SE of the slope comes from batch means.
    """
    # a Direction carries its 1-based index; plain integers are 0-based
    e0 = e0.index - 1 if hasattr(e0, "index") else int(e0)
    d = law.d
    opp = (e0 + d) % (2 * d)
    if n_grid is None:
        n_grid = np.unique(np.geomspace(1, 10 * fit_range[1], 60).astype(np.int64))
    n_grid = np.asarray(n_grid, dtype=np.int64)
    a = iid_sites(law, n_samples, derive_seed(seed, "trap", "a"))[:, e0]
    b = iid_sites(law, n_samples, derive_seed(seed, "trap", "b"))[:, opp]
    log_a, log_b = np.log(a), np.log(b)

    surv = _annealed(log_a, log_b, n_grid)
    paired = np.array([np.mean(np.exp(quenched_trap_log_survival(a, b, n))) for n in n_grid])
    T = _sample_trap_times(a, b, np.random.default_rng(derive_seed(seed, "trap", "walks")))
    T.sort()
    at_risk = n_samples - np.searchsorted(T, n_grid, side="right")

    lo, hi = float(fit_range[0]), float(fit_range[1])
    # the mean of w^m rests on few draws once m is large; keep ESS >= min_ess
    hi_ok = 2 * min(_ess_limit(log_a, min_ess), _ess_limit(log_b, min_ess))
    clipped = hi_ok < hi
    if clipped:
        hi = hi_ok
        lo = min(lo, max(4.0, hi / 10))
    fit = np.unique(np.geomspace(lo, hi, 40).astype(np.int64))
    lf = np.log(fit)
    alpha = -_slope(lf, np.log(_annealed(log_a, log_b, fit)))
    per = []
    for idx in np.array_split(np.arange(n_samples), n_batches):
        per.append(-_slope(lf, np.log(_annealed(log_a[idx], log_b[idx], fit))))
    se = float(np.std(per, ddof=1) / math.sqrt(n_batches))
    est = TailEstimate(alpha, se, "loglog_regression", None, [float(u) for u in fit], 0,
                       n_samples, None, {"batch_slopes": [float(p) for p in per],
                                         "fit_range_used": [int(fit[0]), int(fit[-1])],
                                         "fit_range_clipped": bool(clipped)})

    pred = closed = closed_alpha = None
    if isinstance(law, Dirichlet):
        pred = predicted_trap_exponent(law.beta, e0)
        closed = dirichlet_trap_survival(law.beta, e0, n_grid)
        closed_alpha = -_slope(lf, np.log(dirichlet_trap_survival(law.beta, e0, fit)))
    return TrapTail(n_grid, surv, paired, at_risk, at_risk / n_samples, est, pred, closed,
                    closed_alpha)
