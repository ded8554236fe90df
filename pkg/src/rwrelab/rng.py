"""Counter-based random streams and per-site law kernels.

Every random quantity in the package is a pure function of a 64-bit key.
Site environments use the key ``mix(seed, ENV_DOMAIN, x_1, ..., x_d)`` and
walkers use ``mix(seed, WALK_DOMAIN, walker_id)``, so repeated runs and
parallel workers agree without coordination and the environment stream never
overlaps the walker stream.

Streams are SplitMix64 sequences stored in a length-1 ``uint64`` array so that
njit kernels can advance them in place.
"""

import math

import zlib

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

ENV_DOMAIN = np.uint64(0x5EED0E11)
WALK_DOMAIN = np.uint64(0x3A1C0FFE)
SAMPLE_DOMAIN = np.uint64(0x5A3B1E00)

# law codes understood by site_probs
UNIFORM = 0
DIRICHLET = 1
CR_EXAMPLE = 2
RATIO = 3

# sub-law codes for RATIO (stored in params[1])
RATIO_UNIFORM_MASS = 0
RATIO_CR_SPLIT = 1

_INV53 = 1.0 / 9007199254740992.0
_TINY = np.finfo(np.float64).tiny


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = z + GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True)
def site_key(seed, domain, x):
    h = mix64(np.uint64(seed) ^ domain)
    for k in range(x.shape[0]):
        h = mix64(h ^ np.uint64(x[k]))
    return h


@nb.njit(cache=True)
def index_key(seed, domain, i):
    h = mix64(np.uint64(seed) ^ domain)
    return mix64(h ^ np.uint64(i))


@nb.njit(cache=True, inline="always")
def next_u64(state):
    state[0] = state[0] + GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True, inline="always")
def uniform_open(state):
    """Uniform on the open interval (0, 1)."""
    return (float(next_u64(state) >> _S11) + 0.5) * _INV53


@nb.njit(cache=True)
def standard_normal(state):
    u1 = uniform_open(state)
    u2 = uniform_open(state)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@nb.njit(cache=True)
def log_gamma_variate(shape, state):
    """Log of a Gamma(shape, 1) draw.

    Marsaglia-Tsang squeeze for shape >= 1; for shape < 1 the boost
    G(a) = G(a + 1) * U**(1/a), evaluated in log space so that tiny shapes
    never underflow to an exact zero.
    """
    boost = 0.0
    a = shape
    if a < 1.0:
        boost = math.log(uniform_open(state)) / a
        a = a + 1.0
    dd = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * dd)
    while True:
        z = standard_normal(state)
        v = 1.0 + c * z
        if v <= 0.0:
            continue
        v = v * v * v
        u = uniform_open(state)
        if math.log(u) < 0.5 * z * z + dd - dd * v + dd * math.log(v):
            return math.log(dd * v) + boost


@nb.njit(cache=True)
def dirichlet_into(beta, state, out, offset, mass):
    """Write ``mass * Dirichlet(beta)`` into out[offset + j] (log-sum-exp normalised)."""
    n = beta.shape[0]
    logs = np.empty(n)
    top = -np.inf
    for j in range(n):
        logs[j] = log_gamma_variate(beta[j], state)
        if logs[j] > top:
            top = logs[j]
    total = 0.0
    for j in range(n):
        logs[j] = math.exp(logs[j] - top)
        total += logs[j]
    for j in range(n):
        w = logs[j] / total
        if w < _TINY:
            w = _TINY
        out[offset + j] = mass * w


@nb.njit(cache=True)
def draw_site(law, params, d, state, out):
    """Fill ``out`` (length 2d) with one draw of the site law.

    Index j < d is +e_{j+1}; index j + d is -e_{j+1}.
    """
    n = 2 * d
    if law == UNIFORM:
        for j in range(n):
            out[j] = 1.0 / n
    elif law == DIRICHLET:
        dirichlet_into(params[:n], state, out, 0, 1.0)
    elif law == CR_EXAMPLE:
        u = uniform_open(state)
        phi = 0.25 * u * u
        up = uniform_open(state) < 0.5
        out[0] = 2.0 * phi
        out[2] = phi
        if up:
            out[1] = phi
            out[3] = 1.0 - 4.0 * phi
        else:
            out[1] = 1.0 - 4.0 * phi
            out[3] = phi
    elif law == RATIO:
        r = params[0]
        sub = int(params[1])
        if sub == RATIO_CR_SPLIT:
            u = uniform_open(state)
            phi = u * u / (2.0 + r)
            up = uniform_open(state) < 0.5
            out[0] = r * phi
            out[d] = phi
            rest = 1.0 - (2.0 + r) * phi
            if up:
                out[1] = phi
                out[1 + d] = rest
            else:
                out[1] = rest
                out[1 + d] = phi
        else:
            lo = params[2]
            hi = params[3]
            m = lo + (hi - lo) * uniform_open(state)
            out[d] = m / (1.0 + r)
            out[0] = r * out[d]
            tmp = np.empty(n - 2)
            dirichlet_into(params[4:4 + n - 2], state, tmp, 0, 1.0 - m)
            k = 0
            for j in range(n):
                if j == 0 or j == d:
                    continue
                out[j] = tmp[k]
                k += 1
    else:
        raise ValueError("unknown law code")


@nb.njit(cache=True)
def site_probs(law, params, d, seed, x, out):
    """The environment at site x of the realisation labelled by ``seed``."""
    state = np.empty(1, dtype=np.uint64)
    state[0] = site_key(seed, ENV_DOMAIN, x)
    draw_site(law, params, d, state, out)


@nb.njit(cache=True)
def sites_probs(law, params, d, seed, xs):
    out = np.empty((xs.shape[0], 2 * d))
    for k in range(xs.shape[0]):
        site_probs(law, params, d, seed, xs[k], out[k])
    return out


@nb.njit(cache=True)
def iid_draws(law, params, d, seed, n):
    """n independent draws of the site law (stream k keyed by (seed, k))."""
    out = np.empty((n, 2 * d))
    state = np.empty(1, dtype=np.uint64)
    for k in range(n):
        state[0] = index_key(seed, SAMPLE_DOMAIN, k)
        draw_site(law, params, d, state, out[k])
    return out


def derive_seed(seed, *labels):
    """Deterministic child seed from a parent seed and integer or string labels."""
    # strings map through crc32, which is stable across runs and platforms
    x = np.asarray([zlib.crc32(v.encode()) if isinstance(v, str) else int(v) for v in labels],
                   dtype=np.int64).reshape(-1)
    return int(site_key(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), SAMPLE_DOMAIN, x))
