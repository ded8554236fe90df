"""Unit flows theta_{i,x} on Z^d built from two box flows joined by connector paths."""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
import math

import numpy as np

from ..lattice import direction_matrix
from .decompose import cancel_cycles
from .graph import DemandProblem, DirectedGraph, Flow, FlowError, Infeasible, _max_flow, feasible_flow


class GeometryError(ValueError):
    pass


def kappa_i(alpha, i):
    """2 sum_j alpha_j - (alpha_i + alpha_{i+d}), with 1-based direction index i."""
    alpha = list(alpha)
    d = len(alpha) // 2
    k = (i - 1) % d
    return 2 * sum(alpha) - (alpha[k] + alpha[k + d])


def edge_direction(e):
    """1-based direction index of the lattice edge (u, v)."""
    u, v = e
    diff = [b - a for a, b in zip(u, v)]
    d = len(diff)
    for k, s in enumerate(diff):
        if s == 1:
            return k + 1
        if s == -1:
            return k + 1 + d
    raise GeometryError(f"{e} is not a nearest-neighbour edge")


def edge_alpha(alpha, e):
    return alpha[edge_direction(e) - 1]


def _add(x, v):
    return tuple(int(a + b) for a, b in zip(x, v))


def box_sites(x, R):
    d = len(x)
    return [tuple(int(c + o) for c, o in zip(x, off)) for off in product(range(-R, R + 1), repeat=d)]


def in_box(z, x, R):
    return max(abs(a - b) for a, b in zip(z, x)) <= R


def box_ring(x, R):
    """Points of B(x, R) with a neighbour outside it: |z - x|_inf = R."""
    return [z for z in box_sites(x, R) if max(abs(a - b) for a, b in zip(z, x)) == R]


def merged_box_graph(x, i, R):
    """B_i(x, R): the cube of radius R with x and x + e_i identified.

    Both directed edges between the merged pair are removed; edges keep their
    lattice labels (u, v).
    """
    if R < 2:
        raise GeometryError("the merged box needs R >= 2")
    x = tuple(int(v) for v in x)
    d = len(x)
    ei = direction_matrix(d)[i - 1]
    y = _add(x, ei)
    sites = box_sites(x, R)
    inside = set(sites)
    edges = []
    for u in sites:
        for e in direction_matrix(d):
            v = _add(u, e)
            if v in inside and {u, v} != {x, y}:
                edges.append((u, v))
    vertices = tuple(s for s in sites if s != y)
    return DirectedGraph(vertices, tuple(edges), {y: x})


@dataclass(frozen=True)
class BoxFlowSpec:
    center: tuple
    i: int
    R: int
    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(v) for v in self.center))
        object.__setattr__(self, "alpha", tuple(self.alpha))
        d = len(self.center)
        if len(self.alpha) != 2 * d or any(not a > 0 for a in self.alpha):
            raise ValueError("alpha must hold 2d positive weights")
        if not 1 <= self.i <= 2 * d:
            raise ValueError(f"direction index must lie in 1..{2 * d}")
        if self.R < self.min_radius():
            raise GeometryError(f"R = {self.R} < max_i kappa_i / min_j alpha_j = "
                                f"{self.min_radius()}")
        if not Fraction(1, self.n_boundary) < self.min_ratio():
            raise GeometryError("need 1/|boundary| < alpha(e)/kappa_i for every edge")

    @property
    def d(self):
        return len(self.center)

    @property
    def kappa(self):
        return kappa_i(_exact(self.alpha), self.i)

    @property
    def n_boundary(self):
        return (2 * self.R + 1) ** self.d - (2 * self.R - 1) ** self.d

    def min_radius(self):
        a = _exact(self.alpha)
        return max(kappa_i(a, j) for j in range(1, 2 * self.d + 1)) / min(a)

    def min_ratio(self):
        return min(_exact(self.alpha)) / self.kappa

    def capacity(self, e):
        return _exact(self.alpha)[edge_direction(e) - 1] / self.kappa


def _exact(alpha):
    return [a if isinstance(a, Fraction) else Fraction(a) for a in alpha]


def default_radius(alpha, d):
    """Smallest R >= ceil(max kappa / min alpha) with 1/|boundary| < min alpha / kappa_i."""
    a = _exact(alpha)
    kmax = max(kappa_i(a, j) for j in range(1, 2 * d + 1))
    R = max(2, math.ceil(kmax / min(a)))
    while not Fraction(1, (2 * R + 1) ** d - (2 * R - 1) ** d) < min(a) / kmax:
        R += 1
    return R


def _box_flow(center, i, R, alpha, exact):
    spec = BoxFlowSpec(center, i, R, alpha)
    g = merged_box_graph(spec.center, i, R)
    ring = box_ring(spec.center, R)
    share = Fraction(1, len(ring))
    caps = {e: spec.capacity(e) for e in g.edges}
    prob = DemandProblem(g, caps, spec.center, {z: share for z in ring})
    out = feasible_flow(prob, exact=exact)
    if isinstance(out, Infeasible):
        raise FlowError(f"box flow infeasible (bug certificate): K of size {len(out.K)}, "
                        f"c(d+K) = {out.cut_capacity} < {out.outside_demand}")
    return cancel_cycles(out)


def source_box_flow(spec, exact=True):
    """Unit flow from the merged centre leaving B_i(x, R) uniformly on its boundary,
    with theta(e) <= alpha(e)/kappa_i."""
    return _box_flow(spec.center, spec.i, spec.R, spec.alpha, exact)


def sink_box_flow(spec, exact=True):
    """Unit flow entering uniformly from the boundary and ending at the merged centre.

    Obtained by reversing a source flow computed with alpha(e) and alpha(-e)
    swapped, so each reversed edge respects its own capacity.
    """
    d = spec.d
    swapped = tuple(spec.alpha[(j + d) % (2 * d)] for j in range(2 * d))
    f = _box_flow(spec.center, spec.i, spec.R, swapped, exact)
    values = {(v, u): val for (u, v), val in f.values.items()}
    g = f.graph
    return Flow(DirectedGraph(g.vertices, tuple((v, u) for u, v in g.edges), g.merged), values)


# ---------------------------------------------------------------- connector paths


@dataclass(frozen=True)
class ConnectorFamily:
    paths: list  # each a list of lattice edges
    K1: float
    K2: float
    N: int  # |x_b - x_a|_1
    method: str

    def max_length(self):
        return max(len(p) for p in self.paths)


def _staircase_2d(R, D):
    """Paths in the frame A = (0, 0), B = (D, 0), as vertex lists."""
    paths = []
    # front face of A -> back face of B, straight
    for y in range(-R, R + 1):
        paths.append([(x, y) for x in range(R, D - R + 1)])
    # top and bottom faces: nested arches of height R - x
    for sign in (1, -1):
        for x in range(-R + 1, R):
            h = R - x
            top = sign * (R + h)
            p = [(x, sign * y) for y in range(R, R + h + 1)]
            p += [(xx, top) for xx in range(x + 1, D - x + 1)]
            p += [(D - x, sign * y) for y in range(R + h - 1, R - 1, -1)]
            paths.append(p)
    # back face of A -> front face of B, looping around outside the arches
    for y in range(-R, R + 1):
        sign = 1 if y >= 0 else -1
        w = R - y + 1 if y >= 0 else R + 1 + y
        Y = sign * (3 * R - 1 + w)
        xl, xr = -R - w, D + R + w
        p = [(x, y) for x in range(-R, xl - 1, -1)]
        p += [(xl, yy) for yy in range(y + sign, Y + sign, sign)]
        p += [(x, Y) for x in range(xl + 1, xr + 1)]
        p += [(xr, yy) for yy in range(Y - sign, y - sign, -sign)]
        p += [(x, y) for x in range(xr - 1, D + R - 1, -1)]
        paths.append(p)
    return paths


def _vertex_path_to_edges(p):
    return [(p[k], p[k + 1]) for k in range(len(p) - 1)]


def _geodesic(a, b):
    pts = [tuple(a)]
    cur = list(a)
    for k in range(len(a)):
        step = 1 if b[k] > cur[k] else -1
        while cur[k] != b[k]:
            cur[k] += step
            pts.append(tuple(cur))
    return pts


def _face_geodesic(x_a, x_b, R):
    """L1-geodesic from the face of B(x_a, R) facing x_b to the opposite face of B(x_b, R).

    One step along the dominant axis leaves the first box, the other axes are
    then corrected, and the dominant axis is finished last.
    """
    diff = [b - a for a, b in zip(x_a, x_b)]
    k = max(range(len(diff)), key=lambda j: abs(diff[j]))
    s = 1 if diff[k] > 0 else -1
    if abs(diff[k]) == 2 * R + 1 and any(diff[j] for j in range(len(diff)) if j != k):
        raise GeometryError("boxes too close for a single offset geodesic")
    start = list(x_a)
    start[k] += s * R
    end = list(x_b)
    end[k] -= s * R
    pts = [tuple(start)]
    cur = list(start)
    cur[k] += s
    pts.append(tuple(cur))
    for j in range(len(diff)):
        if j == k:
            continue
        step = 1 if end[j] > cur[j] else -1
        while cur[j] != end[j]:
            cur[j] += step
            pts.append(tuple(cur))
    while cur[k] != end[k]:
        cur[k] += s
        pts.append(tuple(cur))
    return pts


def connector_paths(x_a, x_b, R, count=None):
    """Edge-disjoint simple paths joining every boundary point of B(x_a, R) to a
    boundary point of B(x_b, R), outside both boxes except at their endpoints.

    d = 2 with x_b - x_a along an axis uses an explicit staircase family
    (length <= N + 14 R + 4); other geometries are routed by a unit-capacity
    max-flow in a window around the boxes.
    """
    x_a = tuple(int(v) for v in x_a)
    x_b = tuple(int(v) for v in x_b)
    d = len(x_a)
    diff = [b - a for a, b in zip(x_a, x_b)]
    N = sum(abs(v) for v in diff)
    if N == 0:
        raise GeometryError("the two boxes coincide")
    if max(abs(v) for v in diff) <= 2 * R:
        raise GeometryError("boxes overlap or touch")
    want = 1 if R == 0 else (2 * R + 1) ** d - (2 * R - 1) ** d
    if count is not None and count not in (1, want):
        raise GeometryError(f"count must be 1 or |boundary| = {want}")
    if R == 0:
        return ConnectorFamily([_vertex_path_to_edges(_geodesic(x_a, x_b))], 1, 0, N, "geodesic")
    if count == 1:
        return ConnectorFamily([_vertex_path_to_edges(_face_geodesic(x_a, x_b, R))], 1, 0, N,
                               "geodesic")
    axes = [k for k, v in enumerate(diff) if v != 0]
    if d == 2 and len(axes) == 1:
        ax = axes[0]
        other = 1 - ax
        s = 1 if diff[ax] > 0 else -1

        def place(p):
            out = [0, 0]
            out[ax] = x_a[ax] + s * p[0]
            out[other] = x_a[other] + p[1]
            return tuple(out)

        vp = _staircase_2d(R, abs(diff[ax]))
        paths = [_vertex_path_to_edges([place(p) for p in path]) for path in vp]
        return ConnectorFamily(paths, 1, 14 * R + 4, N, "staircase")
    paths = _route_by_max_flow(x_a, x_b, R)
    K2 = max(len(p) for p in paths) - N
    return ConnectorFamily(paths, 1, max(K2, 0), N, "max_flow")


def _route_by_max_flow(x_a, x_b, R, margin=None):
    d = len(x_a)
    ring_a, ring_b = box_ring(x_a, R), box_ring(x_b, R)
    need = len(ring_a)
    margin = margin or 2 * R + 2
    while True:
        lo = [min(a, b) - R - margin for a, b in zip(x_a, x_b)]
        hi = [max(a, b) + R + margin for a, b in zip(x_a, x_b)]
        free = [z for z in product(*[range(l, h + 1) for l, h in zip(lo, hi)])
                if not in_box(z, x_a, R) and not in_box(z, x_b, R)]
        ids = {z: k for k, z in enumerate(free + ring_a + ring_b)}
        S, T = len(ids), len(ids) + 1
        arcs_to, arcs_cap, adj = [], [], [[] for _ in range(len(ids) + 2)]
        labels = []

        def add(u, v, c, lab=None):
            adj[u].append(len(arcs_to))
            arcs_to.append(v), arcs_cap.append(c)
            adj[v].append(len(arcs_to))
            arcs_to.append(u), arcs_cap.append(0)
            labels.append(lab)

        dirs = direction_matrix(d)
        free_set = set(free)
        ring_b_set = set(ring_b)
        for z in ring_a:
            add(S, ids[z], 1)
            for e in dirs:
                w = _add(z, e)
                if w in free_set:
                    add(ids[z], ids[w], 1, (z, w))
        for z in free:
            for e in dirs:
                w = _add(z, e)
                if w in free_set or w in ring_b_set:
                    add(ids[z], ids[w], 1, (z, w))
        for z in ring_b:
            add(ids[z], T, 1)
        value, _ = _max_flow(len(ids) + 2, arcs_to, arcs_cap, adj, S, T, 0)
        if value == need:
            break
        margin *= 2
    used = {}
    for k, lab in enumerate(labels):
        if lab is not None and arcs_cap[2 * k + 1] > 0:
            used[lab] = True
    # cancel antiparallel pairs so no edge is traversed both ways across paths
    for (u, v) in list(used):
        if (v, u) in used and (u, v) in used:
            del used[(u, v)], used[(v, u)]
    out = {}
    for (u, v) in used:
        out.setdefault(u, []).append(v)
    paths = []
    for z in ring_a:
        walk, cur = [z], z
        while cur not in ring_b_set:
            cur = out[cur].pop()
            if cur in walk:  # loop erasure keeps the path simple
                walk = walk[:walk.index(cur) + 1]
            else:
                walk.append(cur)
        paths.append(_vertex_path_to_edges(walk))
    return paths


def audit_connectors(family, x_a, x_b, R):
    """Dict of check -> (ok, witness) for the four connector-path requirements."""
    ring_a, ring_b = set(box_ring(x_a, R)), set(box_ring(x_b, R))
    if R == 0:
        ring_a, ring_b = {tuple(x_a)}, {tuple(x_b)}
    report = {}
    starts = [p[0][0] for p in family.paths]
    ends_ok = all(p[0][0] in ring_a and p[-1][1] in ring_b for p in family.paths)
    report["endpoints"] = (ends_ok and len(set(starts)) == len(starts) == len(ring_a), None)
    bad = None
    for p in family.paths:
        verts = [p[0][0]] + [e[1] for e in p]
        for v in verts[1:-1]:
            if in_box(v, x_a, R) or in_box(v, x_b, R):
                bad = v
        if len(set(verts)) != len(verts):
            bad = ("not simple", verts[0])
    report["outside_boxes_and_simple"] = (bad is None, bad)
    seen, clash = set(), None
    for p in family.paths:
        for e in p:
            if e in seen:
                clash = e
            seen.add(e)
    for (u, v) in seen:
        if (v, u) in seen:
            clash = (u, v)
    report["edge_disjoint_no_reversal"] = (clash is None, clash)
    bound = family.K1 * family.N + family.K2
    longest = max(len(p) for p in family.paths)
    report["length_bound"] = (longest <= bound, (longest, bound))
    return report


# ---------------------------------------------------------------- theta


@dataclass(frozen=True)
class ThetaSpec:
    x_a: tuple
    x_b: tuple
    i: int
    alpha: tuple
    R: int
    kappa: Fraction
    n_boundary: int
    gamma: Fraction
    K1: float
    K2: float
    N: int
    box_edge_counts: tuple

    @property
    def source(self):
        return self.x_a

    @property
    def sink(self):
        return self.x_b

    def capacity(self, e):
        return _exact(self.alpha)[edge_direction(e) - 1] / self.kappa

    def in_S(self, z):
        return in_box(z, self.x_a, self.R) or in_box(z, self.x_b, self.R)

    def support_bound(self):
        return sum(self.box_edge_counts) + self.n_boundary * (self.K1 * self.N + self.K2)

    def to_dict(self):
        return {
            "x_a": list(self.x_a), "x_b": list(self.x_b), "i": self.i,
            "alpha": [str(a) for a in self.alpha], "R": self.R,
            "kappa": str(self.kappa), "n_boundary": self.n_boundary, "gamma": str(self.gamma),
            "K1": self.K1, "K2": self.K2, "N": self.N, "box_edge_counts": list(self.box_edge_counts),
        }

    @classmethod
    def from_dict(cls, dd):
        return cls(tuple(dd["x_a"]), tuple(dd["x_b"]), int(dd["i"]),
                   tuple(Fraction(a) for a in dd["alpha"]), int(dd["R"]), Fraction(dd["kappa"]),
                   int(dd["n_boundary"]), Fraction(dd["gamma"]), dd["K1"], dd["K2"], int(dd["N"]),
                   tuple(dd["box_edge_counts"]))


@dataclass
class Theta:
    flow: Flow
    spec: ThetaSpec
    connectors: ConnectorFamily


def build_theta(x_a, x_b, i, alpha, R=None, exact=True):
    """Unit flow on Z^d from the merged pair {x_a, x_a + e_i} to {x_b, x_b + e_i}.

    Source box flow, connector paths carrying 1/|boundary| each, and a
    reversed box flow at x_b, all bounded by alpha(e)/kappa_i.
    """
    x_a = tuple(int(v) for v in x_a)
    x_b = tuple(int(v) for v in x_b)
    d = len(x_a)
    alpha = tuple(_exact(alpha))
    if R is None:
        R = default_radius(alpha, d)
    spec_a = BoxFlowSpec(x_a, i, R, alpha)
    spec_b = BoxFlowSpec(x_b, i, R, alpha)
    conn = connector_paths(x_a, x_b, R)
    f_a = source_box_flow(spec_a, exact)
    f_b = sink_box_flow(spec_b, exact)
    share = Fraction(1, spec_a.n_boundary) if exact else 1.0 / spec_a.n_boundary

    values = {}
    for f in (f_a, f_b):
        for e, v in f.values.items():
            if v:
                values[e] = values.get(e, 0) + v
    for p in conn.paths:
        for e in p:
            if e in values:
                raise GeometryError(f"connector edge {e} collides with a box edge")
            values[e] = share
    verts = set(f_a.graph.vertices) | set(f_b.graph.vertices)
    for p in conn.paths:
        for u, v in p:
            verts.update((u, v))
    ei = tuple(int(v) for v in direction_matrix(d)[i - 1])
    merged = {_add(x_a, ei): x_a, _add(x_b, ei): x_b}
    verts -= set(merged)
    edges = set(f_a.graph.edges) | set(f_b.graph.edges) | set(values)
    g = DirectedGraph(tuple(sorted(verts)), tuple(sorted(edges)), merged)
    kappa = spec_a.kappa
    tspec = ThetaSpec(x_a, x_b, i, alpha, R, kappa, spec_a.n_boundary,
                      kappa / spec_a.n_boundary, conn.K1, conn.K2, conn.N,
                      (len(f_a.graph.edges), len(f_b.graph.edges)))
    return Theta(Flow(g, values), tspec, conn)


def theta_graph_from_values(values, spec):
    """Rebuild the lattice graph of a theta flow from its edge values (for loaded files)."""
    d = len(spec.x_a)
    ei = tuple(int(v) for v in direction_matrix(d)[spec.i - 1])
    merged = {_add(spec.x_a, ei): spec.x_a, _add(spec.x_b, ei): spec.x_b}
    verts = set()
    for u, v in values:
        verts.update((merged.get(u, u), merged.get(v, v)))
    verts.update((spec.x_a, spec.x_b))
    return DirectedGraph(tuple(sorted(verts)), tuple(sorted(values)), merged)
