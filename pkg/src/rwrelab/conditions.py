"""Checkers for ellipticity weights, Dirichlet regions, (P)_M box estimates and constants."""

from dataclasses import dataclass, field, asdict
from fractions import Fraction
import math

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

from .environment import Dirichlet, QuenchedEnvironment, iid_sites
from .lattice import BoxSpec, as_unit, canonical_directions
from .rng import derive_seed
from .tails import hill_at
from .walker import annealed_box_exits, annealed_env_seed, exact_exit_distribution, SOLVER_CAP

C0_NOTE = ("(P)_M is an asymptotic condition on boxes of size at least c0 "
           "(log10 c0 = {c0:.1f} for d = {d}); these estimates are desk-scale diagnostics only "
           "and the observable is the trend over L.")


class ParameterError(ValueError):
    pass


# ---------------------------------------------------------------- kappa and regions


@dataclass(frozen=True)
class EllipticityWeights:
    alpha: tuple

    def __post_init__(self):
        a = tuple(self.alpha)
        if len(a) < 4 or len(a) % 2:
            raise ParameterError("weights need 2d >= 4 entries")
        if any(not v > 0 for v in a):
            raise ParameterError(f"weights must be strictly positive, got {a}")
        object.__setattr__(self, "alpha", a)

    @property
    def d(self):
        return len(self.alpha) // 2


def kappa(alpha):
    """2 sum_e alpha(e) - max_i (alpha_i + alpha_{i+d}).

    The sum is exactly rounded (fsum), so the value does not depend on the
    order of the weights; Fractions stay exact.
    """
    a = EllipticityWeights(tuple(getattr(alpha, "alpha", alpha))).alpha
    d = len(a) // 2
    pair = max(a[i] + a[i + d] for i in range(d))
    if all(isinstance(v, Fraction) for v in a):
        return 2 * sum(a) - pair
    return 2 * math.fsum(float(v) for v in a) - float(pair)


def dirichlet_kappa(beta):
    """kappa of a Dirichlet law: the same formula with the weights beta."""
    return kappa(beta)


def e_prime_holds(beta, t):
    """(E')_t for a Dirichlet law: kappa(beta) > t."""
    return dirichlet_kappa(beta) > t


def check_kalikow_region(beta):
    b = EllipticityWeights(tuple(beta)).alpha
    d = len(b) // 2
    return max(abs(b[i] - b[i + d]) for i in range(d)) > 1


@dataclass(frozen=True)
class RegionVerdict:
    in_region: bool
    direction: int | None  # 1-based index i of the axis with beta(-e_i) <= eps
    epsilon: float
    caveat: str

    def __bool__(self):
        return self.in_region


def check_theorem5_region(beta, epsilon, direction=None):
    """Is the weight opposite some axis direction at most epsilon?

    With ``direction`` = i (1-based, i <= d) only beta_{i+d} is tested. By
    default every axis is tried and the first one that qualifies is reported,
    which covers relabelled axes.
    """
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    b = EllipticityWeights(tuple(beta)).alpha
    d = len(b) // 2
    axes = [direction] if direction is not None else range(1, 2 * d + 1)
    caveat = ("epsilon is existential and depends on the other parameters; the verdict is "
              "in-region for the supplied epsilon only")
    for i in axes:
        if not 1 <= i <= 2 * d:
            raise ParameterError(f"direction must lie in 1..{2 * d}")
        opp = (i - 1 + d) % (2 * d)
        if b[opp] <= epsilon:
            return RegionVerdict(True, i, float(epsilon), caveat)
    return RegionVerdict(False, None, float(epsilon), caveat)


def check_E_prime_toward_direction(alpha, v_hat, tol=1e-12):
    """Weights of directions e with e . v_hat >= 0 share one value alpha_1; the rest are <= alpha_1."""
    a = EllipticityWeights(tuple(alpha)).alpha
    d = len(a) // 2
    v = as_unit(v_hat)
    half = [a[k] for k, e in enumerate(canonical_directions(d)) if np.dot(e.vector, v) >= -tol]
    a1 = half[0]
    if any(x != a1 for x in half):
        return False
    return all(x <= a1 for x in a)


# ---------------------------------------------------------------- formulas


def aqee_exponent(beta0, beta, zeta, d):
    """g = min{beta + zeta, 3 beta - 2 + (d - 1)(beta - beta0)}."""
    if not 0.5 < beta0 < 1:
        raise ParameterError("beta0 must lie in (1/2, 1)")
    if not (beta0 + 1) / 2 < beta < 1:
        raise ParameterError("beta must lie in ((beta0 + 1)/2, 1)")
    if not 0 < zeta < beta0:
        raise ParameterError("zeta must lie in (0, beta0)")
    if d < 2:
        raise ParameterError("d must be >= 2")
    return min(beta + zeta, 3 * beta - 2 + (d - 1) * (beta - beta0))


def c0_log10(d, log_eta=0.0):
    """log10 of c0 = (2/3) 3^(120 d^4 + 3000 d (log eta)^2); the value itself overflows."""
    if d < 2:
        raise ParameterError("d must be >= 2")
    if log_eta < 0:
        raise ParameterError("log eta must be >= 0")
    return math.log10(2 / 3) + (120 * d ** 4 + 3000 * d * log_eta ** 2) * math.log10(3)


# ---------------------------------------------------------------- eta_alpha


def dirichlet_eta(beta, alpha, e):
    """E[omega(0, e)^(-alpha)] for Dirichlet(beta): finite iff alpha < beta_e."""
    beta = np.asarray(beta, dtype=float)
    b, S = beta[e], beta.sum()
    if alpha >= b:
        return math.inf
    return math.exp(gammaln(b - alpha) + gammaln(S) - gammaln(b) - gammaln(S - alpha))


@dataclass
class EtaEstimate:
    value: float
    per_direction: dict  # 1-based index -> empirical mean
    tail_index: dict  # 1-based index -> Hill index of omega^(-alpha)
    doubling_ratio: dict  # mean over N / mean over N/2
    divergence_flag: bool
    closed_form: dict | None = None

    def to_dict(self):
        return asdict(self)


def eta_alpha_estimate(law, alpha, directions=None, n_samples=100_000, seed=0):
    """Empirical max_e E[omega(0, e)^(-alpha)] with a divergence diagnostic.

    The flag is raised when the Hill tail index of omega^(-alpha) is below 1
    (an infinite mean), or the mean jumps by more than 50% when the sample
    doubles. Finiteness cannot be decided by sampling; this is a diagnostic.
    """
    d = law.d
    dirs = list(range(1, 2 * d + 1)) if directions is None else [int(j) for j in directions]
    if alpha == 0:
        return EtaEstimate(1.0, {j: 1.0 for j in dirs}, {}, {}, False,
                           {j: 1.0 for j in dirs} if isinstance(law, Dirichlet) else None)
    if alpha < 0:
        raise ParameterError("alpha must be >= 0")
    w = iid_sites(law, n_samples, derive_seed(seed, "eta"))
    per, index, ratio, flag = {}, {}, {}, False
    k = math.ceil(n_samples ** 0.6)
    for j in dirs:
        y = w[:, j - 1] ** (-alpha)
        m = float(y.mean())
        per[j] = m
        ratio[j] = m / float(y[: n_samples // 2].mean())
        try:
            index[j] = hill_at(y, np.zeros(y.size, bool), k)[0]
        except ValueError:
            index[j] = math.inf  # constant column, e.g. the uniform law
        if index[j] < 1 or not 2 / 3 < ratio[j] < 1.5:
            flag = True
    closed = None
    if isinstance(law, Dirichlet):
        closed = {j: dirichlet_eta(law.beta, alpha, j - 1) for j in dirs}
    return EtaEstimate(max(per.values()), per, index, ratio, flag, closed)


# ---------------------------------------------------------------- (P)_M


def wilson_interval(k, n, conf=0.95):
    """Wilson score interval for a binomial proportion k/n."""
    if n <= 0:
        raise ParameterError("n must be positive")
    z = float(norm.ppf(0.5 + conf / 2))
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


@dataclass
class PMReport:
    l: list
    L: float
    L_tilde: float
    M: float
    n_walks: int
    p_hat: float
    ci_low: float
    ci_high: float
    threshold: float
    verdict: str  # pass, fail, inconclusive
    censored: int
    exact_annealed: float | None = None
    exact_se: float | None = None
    exact_envs: int = 0
    note: str = ""

    @property
    def ci_halfwidth(self):
        return (self.ci_high - self.ci_low) / 2

    def verdict_at(self, M):
        """Verdict of the same estimate against L^(-M)."""
        return _verdict(self.ci_low, self.ci_high, float(self.L) ** (-M))

    def to_dict(self):
        out = asdict(self)
        out["ci_halfwidth"] = self.ci_halfwidth
        return out


def _verdict(lo, hi, thr):
    if hi < thr:
        return "pass"
    if lo > thr:
        return "fail"
    return "inconclusive"


def default_L_tilde(L, cap=500):
    return min(70 * L ** 3, cap)


def estimate_pm(law, l, L, M, L_tilde=None, n_walks=10_000, horizon=10 ** 7, seed=0,
                exact_envs=0, cap=SOLVER_CAP):
    """Annealed estimate of P_0(X_{T_B} . l < L) for B = B_{l, L, L_tilde}.

    Walks still inside at the horizon count as non-front exits. With
    ``exact_envs`` > 0 and a box within the solver cap, the exact quenched
    non-front mass is averaged over the environments of the first walks.
    """
    if L < 2:
        raise ParameterError("(P)_M needs L >= 2")
    if n_walks < 100:
        raise ParameterError("need at least 100 walks")
    L_tilde = default_L_tilde(L) if L_tilde is None else L_tilde
    box = BoxSpec(l, L, L_tilde)
    exits, _, cens = annealed_box_exits(law, box, n_walks, horizon, seed)
    lv = np.asarray(box.l)
    front = (exits @ lv >= L) & ~cens
    k = int(n_walks - front.sum())
    lo, hi = wilson_interval(k, n_walks)
    thr = float(L) ** (-M)
    rep = PMReport(list(map(float, box.l)), float(L), float(L_tilde), float(M), int(n_walks),
                   k / n_walks, lo, hi, thr, _verdict(lo, hi, thr), int(cens.sum()),
                   note=C0_NOTE.format(c0=c0_log10(law.d), d=law.d))
    if exact_envs:
        sites = np.array([s for s in box.bounding_sites() if box.contains(s)])
        if len(sites) <= cap:
            vals = []
            for w in range(exact_envs):
                env = QuenchedEnvironment(law, annealed_env_seed(seed, w))
                dist = exact_exit_distribution(env, sites, np.zeros(law.d, np.int64), cap)
                vals.append(sum(p for z, p in dist.items() if np.dot(z, lv) < L))
            rep.exact_annealed = float(np.mean(vals))
            rep.exact_se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rep.exact_envs = exact_envs
    return rep


def pm_sweep(law, l, Ls, M, n_walks=10_000, seed=0, L_tilde_cap=500, exact_envs=0):
    """PMReports over L (L_tilde = min(70 L^3, cap)) and whether p_hat strictly decreases."""
    reps = [estimate_pm(law, l, L, M, default_L_tilde(L, L_tilde_cap), n_walks,
                        seed=derive_seed(seed, "pm", int(L)), exact_envs=exact_envs) for L in Ls]
    ps = [r.p_hat for r in reps]
    return reps, all(b < a for a, b in zip(ps, ps[1:]))


def estimate_direction(law, n_walks=100, n_steps=10 ** 5, seed=0):
    """Normalised mean endpoint of long annealed walks, an estimate of v_hat."""
    from .walker import annealed_positions

    X = annealed_positions(law, n_walks, [n_steps], seed)[:, 0, :].mean(axis=0)
    nrm = np.linalg.norm(X)
    return X / nrm if nrm > 0 else X


# ---------------------------------------------------------------- report


@dataclass
class HypothesisReport:
    kappa_value: float
    d: int
    E_prime_levels: dict
    kalikow: bool | None
    theorem5_region: dict | None
    lln: bool
    annealed_clt: bool
    quenched_clt: bool
    eta_alpha: dict = field(default_factory=dict)
    c0_log10: float = 0.0
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def hypothesis_report(beta=None, alpha=None, law=None, v_hat=None, epsilon=None,
                      eta_alpha=None, eta_samples=100_000, seed=0):
    """Assemble kappa, (E')_t levels, regions, LLN and CLT hypothesis flags and constants.

    Pass Dirichlet parameters ``beta`` (or a Dirichlet ``law``), or general
    weights ``alpha``. LLN needs kappa > 1, the annealed CLT kappa > 2 and
    the quenched CLT kappa > 176 d; (P)_M itself is a separate check.
    """
    if law is not None and beta is None and isinstance(law, Dirichlet):
        beta = law.beta
    weights = beta if beta is not None else alpha
    if weights is None:
        raise ParameterError("need beta, alpha or a Dirichlet law")
    k = kappa(weights)
    d = len(weights) // 2
    levels = {"1": k > 1, "2": k > 2, str(176 * d): k > 176 * d}
    notes = [C0_NOTE.format(c0=c0_log10(d), d=d)]
    t5 = None
    if beta is not None and epsilon is not None:
        v = check_theorem5_region(beta, epsilon)
        t5 = {"in_region": v.in_region, "direction": v.direction, "epsilon": v.epsilon,
              "caveat": v.caveat}
    eta = {}
    if eta_alpha is not None and law is not None:
        all_dirs = eta_alpha_estimate(law, eta_alpha, None, eta_samples, seed)
        eta["all_directions"] = all_dirs.to_dict()
        if v_hat is not None:
            v = as_unit(v_hat)
            half = [e.index for e in canonical_directions(d) if np.dot(e.vector, v) >= -1e-12]
            eta["half_space"] = eta_alpha_estimate(law, eta_alpha, half, eta_samples, seed).to_dict()
        else:
            notes.append("v_hat not supplied; it is usually unknown, so only the all-directions "
                         "eta is reported")
    if beta is not None and check_kalikow_region(beta):
        notes.append("parameters lie in the Kalikow region")
    return HypothesisReport(float(k), d, levels,
                            check_kalikow_region(beta) if beta is not None else None, t5,
                            k > 1, k > 2, k > 176 * d, eta, c0_log10(d), notes)
