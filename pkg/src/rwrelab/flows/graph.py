"""Finite directed graphs, flows, and max-flow feasibility with vertex demands."""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations


class FlowError(ValueError):
    pass


@dataclass(frozen=True)
class DirectedGraph:
    """Edges are (tail, head) pairs of *labels*.

    ``merged`` maps an alias label to its representative vertex; the graph's
    vertex set is the set of representatives. Lattice graphs keep the
    original lattice edges as labels so flows can be read back on Z^d.
    """

    vertices: tuple
    edges: tuple
    merged: dict = field(default_factory=dict)

    def __post_init__(self):
        vs = set(self.vertices)
        for a, b in self.edges:
            ta, hb = self.rep(a), self.rep(b)
            if ta not in vs or hb not in vs:
                raise FlowError(f"edge {(a, b)} references an unknown vertex")
            if ta == hb:
                raise FlowError(f"self-loop at {ta}")

    def rep(self, v):
        return self.merged.get(v, v)

    def tail(self, e):
        return self.rep(e[0])

    def head(self, e):
        return self.rep(e[1])


@dataclass
class Flow:
    """Nonnegative edge values (missing edges carry zero)."""

    graph: DirectedGraph
    values: dict

    def __post_init__(self):
        for e, v in self.values.items():
            if v < 0:
                raise FlowError(f"negative flow {v} on {e}")

    def support(self):
        return {e: v for e, v in self.values.items() if v != 0}

    def divergence(self, vertex=None):
        """Outflow minus inflow, at one vertex or as a dict over all vertices."""
        g = self.graph
        if vertex is not None and g.rep(vertex) not in set(g.vertices):
            raise FlowError(f"unknown vertex {vertex}")
        div = {v: 0 for v in g.vertices}
        for e, val in self.values.items():
            div[g.tail(e)] += val
            div[g.head(e)] -= val
        return div if vertex is None else div[g.rep(vertex)]


def divergence(flow, vertex):
    return flow.divergence(vertex)


@dataclass(frozen=True)
class DemandProblem:
    """Find theta with 0 <= theta <= c and div theta = sum_x p_x (delta_{x0} - delta_x)."""

    graph: DirectedGraph
    capacities: dict  # edge -> c(e)
    source: object
    demands: dict  # vertex -> p_x

    def __post_init__(self):
        for e, c in self.capacities.items():
            if c < 0:
                raise FlowError(f"negative capacity on {e}")
        for v, p in self.demands.items():
            if p < 0:
                raise FlowError(f"negative demand at {v}")

    def capacity(self, e):
        return self.capacities.get(e, 0)


@dataclass(frozen=True)
class Infeasible:
    """Certificate K containing x0 with c(d+K) < sum_{x not in K} p_x."""

    K: frozenset
    cut_capacity: object
    outside_demand: object


def cut_capacity(problem, K):
    g = problem.graph
    return sum((problem.capacity(e) for e in g.edges if g.tail(e) in K and g.head(e) not in K), 0)


def outside_demand(problem, K):
    return sum((p for v, p in problem.demands.items() if v not in K), 0)


_SINK = ("__sink__",)


def _max_flow(n, arcs_to, arcs_cap, adj, s, t, zero):
    """Edmonds-Karp on arc arrays (arc 2k forward, 2k + 1 its reverse)."""
    total = zero
    while True:
        prev = [-1] * n
        prev[s] = -2
        q = deque([s])
        while q and prev[t] == -1:
            u = q.popleft()
            for a in adj[u]:
                v = arcs_to[a]
                if prev[v] == -1 and arcs_cap[a] > 0:
                    prev[v] = a
                    q.append(v)
        if prev[t] == -1:
            return total, prev
        push = None
        v = t
        while v != s:
            a = prev[v]
            push = arcs_cap[a] if push is None or arcs_cap[a] < push else push
            v = arcs_to[a ^ 1]
        v = t
        while v != s:
            a = prev[v]
            arcs_cap[a] -= push
            arcs_cap[a ^ 1] += push
            v = arcs_to[a ^ 1]
        total += push


def feasible_flow(problem, exact=True):
    """Flow meeting the demands within the capacities, or an Infeasible certificate.

    Adds a sink delta with an edge (x, delta) of capacity p_x from every
    vertex and runs Edmonds-Karp from x0; feasible iff the max-flow equals
    sum_x p_x. ``exact`` runs the search in Fractions.
    """
    g = problem.graph
    conv = Fraction if exact else float
    zero = conv(0)
    verts = list(g.vertices)
    if problem.source not in set(verts):
        raise FlowError(f"unknown source {problem.source}")
    vid = {v: k for k, v in enumerate(verts)}
    t = len(verts)
    n = t + 1
    arcs_to, arcs_cap = [], []
    adj = [[] for _ in range(n)]

    def add(u, v, c):
        adj[u].append(len(arcs_to))
        arcs_to.append(v), arcs_cap.append(c)
        adj[v].append(len(arcs_to))
        arcs_to.append(u), arcs_cap.append(zero)

    for e in g.edges:
        add(vid[g.tail(e)], vid[g.head(e)], conv(problem.capacity(e)))
    need = zero
    for v, p in problem.demands.items():
        if p:
            add(vid[g.rep(v)], t, conv(p))
            need += conv(p)
    value, prev = _max_flow(n, arcs_to, arcs_cap, adj, vid[problem.source], t, zero)
    short = value < need if exact else value < need - 1e-12 * max(1.0, float(need))
    if short:
        K = frozenset(verts[k] for k in range(t) if prev[k] != -1)
        return Infeasible(K, cut_capacity(problem, K), outside_demand(problem, K))
    values = {}
    for k, e in enumerate(g.edges):
        # flow on the forward arc is what the reverse arc has accumulated
        f = arcs_cap[2 * k + 1]
        if not exact:
            f = min(max(f, 0.0), float(problem.capacity(e)))
        values[e] = f
    return Flow(g, values)


def cut_condition_holds(problem, reachable_only=False):
    """Exhaustive check of c(d+K) >= sum_{x not in K} p_x over all K containing x0.

    With ``reachable_only`` only K whose vertices are reachable from x0 inside
    K are enumerated. Exponential in |V|; an oracle for small graphs.
    """
    g = problem.graph
    others = [v for v in g.vertices if v != problem.source]
    for r in range(len(others) + 1):
        for extra in combinations(others, r):
            K = frozenset((problem.source, *extra))
            if reachable_only and not _reachable_within(g, problem.source, K):
                continue
            if cut_capacity(problem, K) < outside_demand(problem, K):
                return False
    return True


def _reachable_within(g, x0, K):
    seen = {x0}
    stack = [x0]
    while stack:
        u = stack.pop()
        for e in g.edges:
            if g.tail(e) == u and g.head(e) in K and g.head(e) not in seen:
                seen.add(g.head(e))
                stack.append(g.head(e))
    return seen == set(K)


def check_demand_flow(problem, flow, tol=0):
    """(capacity_ok, divergence_ok) for a returned flow; tol = 0 means exact."""
    cap_ok = all(-tol <= flow.values.get(e, 0) <= problem.capacity(e) + tol
                 for e in problem.graph.edges)
    div = flow.divergence()
    total = sum(problem.demands.values(), 0)
    div_ok = True
    for v in problem.graph.vertices:
        want = -problem.demands.get(v, 0) + (total if v == problem.source else 0)
        if abs(div[v] - want) > tol:
            div_ok = False
    return cap_ok, div_ok
