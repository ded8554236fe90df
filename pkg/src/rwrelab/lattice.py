"""Lattice geometry: directions, rotated boxes, slabs, tilted boxes, projections."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

ROT_TOL = 1e-12
UNIT_TOL = 1e-9
# rotated coordinates within this distance of a face count as outside
FACE_TOL = 1e-12


class DimensionError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


class OrientationError(ValueError):
    pass


@dataclass(frozen=True)
class Direction:
    index: int  # 1-based, index i + d is the negation of index i
    vector: tuple

    @property
    def d(self):
        return len(self.vector)

    def opposite(self):
        d = self.d
        j = self.index + d if self.index <= d else self.index - d
        return Direction(j, tuple(-v for v in self.vector))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.vector, dtype=dtype or np.int64)


def canonical_directions(d):
    """The 2d unit vectors e_1..e_d followed by e_{d+i} = -e_i."""
    if d < 2:
        raise DimensionError(f"dimension must be >= 2, got {d}")
    eye = np.eye(d, dtype=np.int64)
    out = [Direction(i + 1, tuple(int(v) for v in eye[i])) for i in range(d)]
    out += [Direction(d + i + 1, tuple(int(-v) for v in eye[i])) for i in range(d)]
    return out


def direction_matrix(d):
    """(2d, d) int64 array whose row j is the direction with 1-based index j + 1."""
    return np.array([dr.vector for dr in canonical_directions(d)], dtype=np.int64)


def as_unit(l):
    l = np.asarray(l, dtype=float)
    n = np.linalg.norm(l)
    if not abs(n - 1.0) <= UNIT_TOL:
        raise NormalizationError(f"direction must have unit L2 norm, got {n!r}")
    return l


def build_rotation(l):
    """Orthogonal matrix R with R e_1 = l.

    Householder reflection between e_1 and +-l, whichever avoids cancellation,
    then one column negated so that det R = +1 and R e_1 = l. Deterministic in l.
    """
    l = as_unit(l)
    d = l.shape[0]
    e1 = np.zeros(d)
    e1[0] = 1.0
    if l[0] >= 0:
        # H e_1 = -l; negating the first column gives R e_1 = l
        w = e1 + l
        col = 0
    else:
        # H e_1 = l; negate a column other than the first
        w = e1 - l
        col = -1
    w = w / np.linalg.norm(w)
    R = np.eye(d) - 2.0 * np.outer(w, w)
    R[:, col] = -R[:, col]
    return R


@dataclass(frozen=True)
class BoxSpec:
    """B_{l,L,L~} = R((-L, L) x (-L~, L~)^{d-1}) intersected with Z^d."""

    l: tuple
    L: float
    L_tilde: float
    rotation: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        l = as_unit(self.l)
        object.__setattr__(self, "l", tuple(float(v) for v in l))
        if self.L <= 0 or self.L_tilde <= 0:
            raise ValueError("box half-widths must be positive")
        R = self.rotation
        if R is None:
            R = build_rotation(l)
        else:
            R = np.asarray(R, dtype=float)
            if not np.allclose(R.T @ R, np.eye(len(l)), atol=ROT_TOL, rtol=0):
                raise ValueError("rotation is not orthogonal")
            if not np.allclose(R[:, 0], l, atol=ROT_TOL, rtol=0):
                raise ValueError("rotation does not map e_1 to l")
        R.setflags(write=False)
        object.__setattr__(self, "rotation", R)

    @property
    def d(self):
        return len(self.l)

    def rotated(self, x):
        """Coordinates R^T x (works on a single point or an (n, d) array)."""
        return np.asarray(x, dtype=float) @ self.rotation

    def contains(self, x):
        y = self.rotated(x)
        half = np.full(self.d, float(self.L_tilde))
        half[0] = self.L
        return np.all(np.abs(y) < half - FACE_TOL, axis=-1)

    def bounding_sites(self):
        """All lattice points of the box (enumerates the integer bounding box)."""
        corners = np.array(list(product(*[(-1.0, 1.0)] * self.d)))
        half = np.full(self.d, float(self.L_tilde))
        half[0] = self.L
        ext = np.abs((corners * half) @ self.rotation.T).max(axis=0)
        ranges = [np.arange(-int(np.ceil(e)), int(np.ceil(e)) + 1) for e in ext]
        grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, self.d)
        return grid[self.contains(grid)].astype(np.int64)


def box_contains(spec, x):
    return bool(spec.contains(np.asarray(x)))


FRONT, BACK, SIDE = "front", "back", "side"


def exit_classification(spec, x):
    """Label a point outside the box as front (x.l >= L), back (x.l <= -L) or side."""
    x = np.asarray(x)
    if box_contains(spec, x):
        raise ValueError(f"{tuple(x)} lies inside the box")
    proj = float(x @ np.asarray(spec.l))
    if proj >= spec.L - FACE_TOL:
        return FRONT
    if proj <= -spec.L + FACE_TOL:
        return BACK
    return SIDE


def outer_boundary(sites):
    """Sites outside ``sites`` at L1 distance 1 from it, as an (n, d) array."""
    sites = np.asarray(sites, dtype=np.int64)
    d = sites.shape[1]
    inside = {tuple(s) for s in sites.tolist()}
    out = set()
    for e in direction_matrix(d):
        for s in (sites + e).tolist():
            t = tuple(s)
            if t not in inside:
                out.add(t)
    return np.array(sorted(out), dtype=np.int64).reshape(-1, d)


def project_P(z, v_hat):
    """Projection onto the v_hat line along the hyperplane {x.e_1 = 0}."""
    v = np.asarray(v_hat, dtype=float)
    if not v[0] > 0:
        raise OrientationError("v_hat . e_1 must be positive")
    z = np.asarray(z, dtype=float)
    return (z[..., :1] / v[0]) * v


def project_Q(z, v_hat):
    return np.asarray(z, dtype=float) - project_P(z, v_hat)


@dataclass(frozen=True)
class SlabSpec:
    beta_prime: float
    L: float

    def contains(self, x):
        x1 = np.asarray(x)[..., 0]
        return (-(self.L ** self.beta_prime) < x1) & (x1 < self.L)


@dataclass(frozen=True)
class TiltedBoxSpec:
    """B_{beta,L}(x): -L^beta < (y-x).e_1 < L and |Q(y-x)|_inf < rho L^beta."""

    center: tuple
    beta: float
    L: float
    v_hat: tuple
    rho: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.L <= 0 or self.rho <= 0:
            raise ValueError("L and rho must be positive")
        v = as_unit(self.v_hat)
        if not v[0] > 0:
            raise OrientationError("v_hat . e_1 must be positive")

    def contains(self, y):
        z = np.asarray(y) - np.asarray(self.center)
        z1 = z[..., 0]
        lb = self.L ** self.beta
        q = np.abs(project_Q(z, self.v_hat)).max(axis=-1)
        return (-lb < z1) & (z1 < self.L) & (q < self.rho * lb)

    def sites(self):
        lb = self.L ** self.beta
        v = np.asarray(self.v_hat, dtype=float)
        d = len(v)
        # along-direction reach plus transverse slack bounds every coordinate
        reach = (self.L / v[0]) + self.rho * lb + 1
        ranges = [np.arange(int(np.floor(-lb)) - 1, int(np.ceil(self.L)) + 1)]
        ranges += [np.arange(-int(np.ceil(reach)), int(np.ceil(reach)) + 1)] * (d - 1)
        grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d)
        grid = grid + np.asarray(self.center, dtype=np.int64)
        return grid[self.contains(grid)].astype(np.int64)

    def front_boundary(self):
        """Outer-boundary points with (y - x).e_1 >= L (lattice rounding of '= L')."""
        bd = outer_boundary(self.sites())
        off = bd[:, 0] - self.center[0]
        return bd[off >= self.L]
