"""I.i.d. environment laws, single-site samplers and lazy quenched realisations."""

from dataclasses import dataclass, field
import threading

import numpy as np

from . import rng as _rng
from .lattice import direction_matrix


class LawError(ValueError):
    pass


def _validate_probs(p):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size % 2 or p.size < 4:
        raise LawError("a site distribution has 2d >= 4 entries")
    if abs(p.sum() - 1.0) > 1e-12:
        raise LawError(f"entries sum to {p.sum()!r}, not 1")
    if np.any(p <= 0):
        raise LawError("site distribution is not elliptic (zero entry)")
    return p


@dataclass(frozen=True)
class SiteDistribution:
    """Transition probabilities omega(x, e_j), j = 1..2d (index j+d is -e_j)."""

    probs: np.ndarray

    def __post_init__(self):
        p = _validate_probs(self.probs).copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def d(self):
        return self.probs.size // 2

    def __getitem__(self, j):
        return self.probs[j]

    def __eq__(self, other):
        return isinstance(other, SiteDistribution) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


def drift(dist):
    """Local drift sum_e omega(e) e."""
    p = dist.probs if isinstance(dist, SiteDistribution) else np.asarray(dist, dtype=float)
    d = p.shape[-1] // 2
    return p @ direction_matrix(d)


# ---------------------------------------------------------------- laws


@dataclass(frozen=True)
class Uniform:
    d: int = 2
    code = _rng.UNIFORM

    def params(self):
        return np.zeros(0)


@dataclass(frozen=True)
class Dirichlet:
    beta: tuple
    code = _rng.DIRICHLET

    def __post_init__(self):
        b = tuple(float(v) for v in self.beta)
        if len(b) < 4 or len(b) % 2:
            raise LawError("Dirichlet needs 2d >= 4 parameters")
        if any(not v > 0 for v in b):
            raise LawError(f"Dirichlet parameters must be positive, got {b}")
        object.__setattr__(self, "beta", b)

    @property
    def d(self):
        return len(self.beta) // 2

    def params(self):
        return np.asarray(self.beta, dtype=float)


@dataclass(frozen=True)
class CRExample:
    """omega(e1) = 2 phi, omega(-e1) = phi, vertical pair {phi, 1 - 4 phi}; phi = U^2/4.

    Only the default phi-law is implemented by the kernels.
    """

    d: int = 2
    code = _rng.CR_EXAMPLE

    def __post_init__(self):
        if self.d != 2:
            raise LawError("the CR example is a d = 2 law")

    def params(self):
        return np.zeros(0)


@dataclass(frozen=True)
class RatioLaw:
    """omega(e1) = r omega(-e1) exactly.

    ``split="uniform_mass"``: the e1-axis mass m ~ U(mass_low, mass_high) is cut
    r : 1 and the remaining 1 - m is spread over the other 2d - 2 directions by
    Dirichlet(rest_beta). ``split="cr"`` (d = 2): phi = U^2/(2 + r), e1-axis
    gets (r phi, phi) and the e2-axis a fair random orientation of
    (phi, 1 - (2 + r) phi); r = 2 is the CR example.
    """

    r: float
    d: int = 2
    split: str = "uniform_mass"
    mass_low: float = 0.1
    mass_high: float = 0.9
    rest_beta: tuple = None
    code = _rng.RATIO

    def __post_init__(self):
        if not self.r > 1:
            raise LawError(f"ratio r must exceed 1, got {self.r}")
        if self.split not in ("uniform_mass", "cr"):
            raise LawError(f"unknown split {self.split!r}")
        if self.split == "cr" and self.d != 2:
            raise LawError("the cr split is a d = 2 law")
        if not 0 < self.mass_low <= self.mass_high < 1:
            raise LawError("need 0 < mass_low <= mass_high < 1")
        rb = self.rest_beta
        rb = (1.0,) * (2 * self.d - 2) if rb is None else tuple(float(v) for v in rb)
        if len(rb) != 2 * self.d - 2 or any(not v > 0 for v in rb):
            raise LawError("rest_beta needs 2d - 2 positive entries")
        object.__setattr__(self, "rest_beta", rb)

    def params(self):
        sub = _rng.RATIO_CR_SPLIT if self.split == "cr" else _rng.RATIO_UNIFORM_MASS
        return np.array([self.r, sub, self.mass_low, self.mass_high, *self.rest_beta])


EnvironmentLaw = Uniform | Dirichlet | CRExample | RatioLaw


def law_from_dict(spec):
    """Build a law from ``{"variant": ..., **params}`` (the config-file form)."""
    spec = dict(spec)
    variant = spec.pop("variant", None)
    kinds = {"uniform": Uniform, "dirichlet": Dirichlet, "cr_example": CRExample, "ratio": RatioLaw}
    if variant not in kinds:
        raise LawError(f"unknown law variant {variant!r}; expected one of {sorted(kinds)}")
    try:
        return kinds[variant](**spec)
    except TypeError as exc:
        raise LawError(f"bad parameters for {variant}: {exc}") from None


def law_to_dict(law):
    names = {Uniform: "uniform", Dirichlet: "dirichlet", CRExample: "cr_example", RatioLaw: "ratio"}
    out = {"variant": names[type(law)]}
    for k, v in law.__dict__.items():
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


# ---------------------------------------------------------------- samplers


def _log_gamma(shape, rng, size):
    # numpy's standard_gamma is Marsaglia-Tsang for shape >= 1; small shapes
    # go through the boost G(a) = G(a + 1) U^(1/a) in log space
    shape = float(shape)
    if shape >= 1.0:
        return np.log(rng.standard_gamma(shape, size))
    g = np.log(rng.standard_gamma(shape + 1.0, size))
    return g + np.log(rng.random(size)) / shape


def sample_dirichlet(beta, rng, size=None):
    """Dirichlet(beta) draw(s) from a numpy Generator.

    Returns a SiteDistribution when size is None, else an (size, 2d) array.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or np.any(~(beta > 0)):
        raise LawError("Dirichlet parameters must be positive")
    n = 1 if size is None else int(size)
    logs = np.stack([_log_gamma(b, rng, n) for b in beta], axis=-1)
    logs -= logs.max(axis=-1, keepdims=True)
    w = np.exp(logs)
    w /= w.sum(axis=-1, keepdims=True)
    w = np.maximum(w, np.finfo(float).tiny)
    if size is None:
        return SiteDistribution(w[0])
    return w


def default_phi(rng, size=None):
    """phi = U^2 / 4, so E phi^(-1/2) = inf while E phi^(-s) < inf for s < 1/2."""
    u = rng.random(size)
    while np.any(u == 0):
        u = np.where(u == 0, rng.random(np.shape(u)), u)
    return 0.25 * u * u


def _cr_from(phi, up):
    phi = float(phi)
    if not 0 < phi < 0.25:
        raise LawError(f"phi must lie in (0, 1/4), got {phi}")
    if up:
        return SiteDistribution(np.array([2 * phi, phi, phi, 1 - 4 * phi]))
    return SiteDistribution(np.array([2 * phi, 1 - 4 * phi, phi, phi]))


def sample_cr_example(rng, phi_law=default_phi):
    """One site of the CR example; ``up`` is the fair coin X."""
    phi = float(phi_law(rng))
    up = rng.random() < 0.5
    return _cr_from(phi, up)


def sample_ratio_law(r, rng, d=2, mass_law=None, rest_beta=None, split="uniform_mass"):
    """One site with omega(e1) = r omega(-e1)."""
    if not r > 1:
        raise LawError(f"ratio r must exceed 1, got {r}")
    p = np.empty(2 * d)
    if split == "cr":
        if d != 2:
            raise LawError("the cr split is a d = 2 law")
        phi = float(rng.random()) ** 2 / (2.0 + r)
        up = rng.random() < 0.5
        p[0], p[d] = r * phi, phi
        rest = 1.0 - (2.0 + r) * phi
        p[1], p[1 + d] = (phi, rest) if up else (rest, phi)
        return SiteDistribution(p)
    m = float(mass_law(rng)) if mass_law is not None else float(rng.uniform(0.1, 0.9))
    if not 0 < m < 1:
        raise LawError("vertical mass must lie in (0, 1)")
    p[d] = m / (1 + r)
    p[0] = r * p[d]
    others = [j for j in range(2 * d) if j not in (0, d)]
    rb = np.ones(2 * d - 2) if rest_beta is None else np.asarray(rest_beta, dtype=float)
    p[others] = (1 - m) * sample_dirichlet(rb, rng, size=1)[0]
    return SiteDistribution(p)


def iid_sites(law, n, seed):
    """n i.i.d. draws of the law as an (n, 2d) array (counter-based, deterministic)."""
    return _rng.iid_draws(law.code, law.params(), law.d, np.uint64(seed), int(n))


# ---------------------------------------------------------------- quenched


@dataclass
class QuenchedEnvironment:
    """A fixed realisation {omega(x)} of the law, materialised lazily.

    site(x) depends only on (master_seed, x); the cache is an insert-if-absent
    map, so concurrent queries of one site agree.
    """

    law: object
    master_seed: int
    cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def d(self):
        return self.law.d

    @property
    def seed64(self):
        return np.uint64(self.master_seed & 0xFFFFFFFFFFFFFFFF)

    def site(self, x):
        key = tuple(int(v) for v in x)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = np.empty(2 * self.d)
        _rng.site_probs(self.law.code, self.law.params(), self.d, self.seed64,
                        np.asarray(key, dtype=np.int64), out)
        dist = SiteDistribution(out)
        with self._lock:
            return self.cache.setdefault(key, dist)

    def probs_at(self, sites):
        """(n, 2d) array of site probabilities (bypasses the object cache)."""
        sites = np.ascontiguousarray(sites, dtype=np.int64).reshape(-1, self.d)
        return _rng.sites_probs(self.law.code, self.law.params(), self.d, self.seed64, sites)

    def memory_bytes(self):
        return len(self.cache) * (2 * self.d * 8 + 64 + 8 * self.d)
