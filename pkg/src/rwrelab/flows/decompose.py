"""Cycle cancelling and weighted-path decomposition of unit flows."""

from fractions import Fraction

from .graph import Flow, FlowError

ZERO_TOL = 1e-15


def _is_zero(v):
    return v == 0 if isinstance(v, Fraction) else abs(v) <= ZERO_TOL


def _out_edges(flow, values):
    g = flow.graph
    out = {}
    for e in sorted(values):
        if not _is_zero(values[e]):
            out.setdefault(g.tail(e), []).append(e)
    return out


def _find_cycle(flow, values):
    g = flow.graph
    out = _out_edges(flow, values)
    done = set()
    for root in sorted(out):
        if root in done:
            continue
        # iterative DFS; entry[k] is the edge that led to stack[k]
        stack, entry, where = [root], [None], {root: 0}
        iters = [iter(out.get(root, ()))]
        while stack:
            e = next(iters[-1], None)
            if e is None:
                v = stack.pop()
                entry.pop(), iters.pop()
                del where[v]
                done.add(v)
                continue
            w = g.head(e)
            if w in where:
                return entry[where[w] + 1:] + [e]
            if w in done:
                continue
            where[w] = len(stack)
            stack.append(w), entry.append(e), iters.append(iter(out.get(w, ())))
    return None


def cancel_cycles(flow):
    """Subtract flow around directed cycles of the support until none remain.

    Divergences are unchanged and every value can only decrease.
    """
    values = dict(flow.values)
    while True:
        cyc = _find_cycle(flow, values)
        if cyc is None:
            break
        m = min(values[e] for e in cyc)
        for e in cyc:
            values[e] = values[e] - m
            if _is_zero(values[e]):
                values[e] = type(m)(0)
    return Flow(flow.graph, {e: v for e, v in values.items() if not _is_zero(v)})


def path_decomposition(flow, tol=1e-10):
    """Weighted paths (edge lists, p_sigma) whose superposition is the flow.

    Repeatedly follows positive edges from the source to a sink, gives the path
    the minimum value along it and subtracts. Cycles are cancelled first.
    """
    div = flow.divergence()
    exact = all(isinstance(v, Fraction) for v in flow.values.values())
    pos = {v: x for v, x in div.items() if x > (0 if exact else tol)}
    neg = {v: -x for v, x in div.items() if x < (0 if exact else -tol)}
    strength = sum(pos.values(), 0)
    if len(pos) != 1 or abs(strength - 1) > (0 if exact else tol):
        raise FlowError(f"not a unit flow from a single source (sources {pos})")
    flow = cancel_cycles(flow)
    g = flow.graph
    values = dict(flow.values)
    (source, supply), = pos.items()
    demand = dict(neg)
    paths = []
    max_iter = len(values) + len(demand) + 1
    while not _is_zero(supply) and (exact or supply > tol):
        if len(paths) > max_iter:
            raise FlowError("decomposition failed to terminate")
        out = _out_edges(flow, values)
        v, edges = source, []
        while not (edges and not _is_zero(demand.get(v, 0))):
            nxt = out.get(v)
            if not nxt:
                raise FlowError(f"flow is not conserved at {v}")
            e = max(nxt, key=lambda k: values[k])
            edges.append(e)
            v = g.head(e)
            if len(edges) > len(values):
                raise FlowError("path search revisited the support (cycle left)")
        w = min([values[e] for e in edges] + [supply, demand[v]])
        for e in edges:
            values[e] -= w
            if _is_zero(values[e]):
                values[e] = type(w)(0)
        supply -= w
        demand[v] -= w
        paths.append((edges, w))
        values = {e: x for e, x in values.items() if not _is_zero(x)}
    return paths


def reconstruct(paths):
    """Edge values sum_{sigma containing e} p_sigma."""
    out = {}
    for edges, w in paths:
        for e in edges:
            out[e] = out.get(e, 0) + w
    return out
