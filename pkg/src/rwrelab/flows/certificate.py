"""Audit of a theta flow against its construction bounds, and JSON round-trips."""

from dataclasses import dataclass, field
from fractions import Fraction
import json

from .boxes import ThetaSpec, edge_direction, GeometryError, theta_graph_from_values
from .graph import Flow

TOL = 1e-10


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: object = None
    detail: str = ""

    def to_dict(self):
        w = self.witness
        if isinstance(w, tuple):
            w = _jsonable(w)
        return {"name": self.name, "passed": self.passed, "witness": w, "detail": self.detail}


@dataclass
class CertificateReport:
    checks: list = field(default_factory=list)
    gamma: object = None

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"all_passed": self.all_passed, "gamma": _num_str(self.gamma),
                "checks": [c.to_dict() for c in self.checks]}


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return _num_str(x)
    return x


def _num_str(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    return v if v is None else float(v)


def _leq(a, b, exact):
    return a <= b if exact else a <= b + TOL


def verify_flow_certificate(flow, spec):
    """Pass/fail per property, each failure naming a witnessing edge or vertex.

    Checks: unit strength, divergence support (+1 at the merged source, -1 at
    the merged sink, 0 elsewhere), capacity theta(e) <= alpha(e)/kappa_i,
    compact support within the construction's size bound, and the off-S bound
    theta(e) kappa_i <= gamma < alpha(e) for edges whose tail lies outside
    S = B(x_a, R) u B(x_b, R).
    """
    exact = all(isinstance(v, Fraction) for v in flow.values.values())
    tol = 0 if exact else TOL
    report = CertificateReport(gamma=spec.gamma)
    g = flow.graph
    div = flow.divergence()
    src, snk = g.rep(spec.x_a), g.rep(spec.x_b)

    strength = div.get(src, 0)
    report.checks.append(CheckResult("unit_strength", abs(strength - 1) <= tol and
                                     abs(div.get(snk, 0) + 1) <= tol, None if abs(strength - 1) <= tol
                                     else src, f"div(source) = {_num_str(strength)}"))

    bad = None
    for v in sorted(div):
        want = 1 if v == src else -1 if v == snk else 0
        if abs(div[v] - want) > tol:
            bad = v
            break
    report.checks.append(CheckResult("divergence_support", bad is None, bad,
                                     "" if bad is None else f"div = {_num_str(div[bad])}"))

    worst, witness = None, None
    for e in sorted(flow.values):
        try:
            cap = spec.capacity(e)
        except GeometryError:
            witness, worst = e, None
            break
        val = flow.values[e]
        if not _leq(val, cap, exact):
            witness, worst = e, val * spec.kappa / spec.alpha[edge_direction(e) - 1]
            break
    report.checks.append(CheckResult("capacity_bound", witness is None, witness,
                                     "" if witness is None else
                                     f"theta(e) kappa_i / alpha(e) = {_num_str(worst)}"
                                     if worst is not None else "not a lattice edge"))

    support = [e for e, v in flow.values.items() if abs(v) > tol]
    bound = spec.support_bound()
    report.checks.append(CheckResult("compact_support", len(support) <= bound,
                                     None if len(support) <= bound else len(support),
                                     f"|support| = {len(support)} <= {bound}"))

    off = None
    for e in sorted(support):
        if spec.in_S(e[0]):
            continue
        a_e = spec.alpha[edge_direction(e) - 1]
        if not (_leq(flow.values[e] * spec.kappa, spec.gamma, exact) and spec.gamma < a_e):
            off = e
            break
    report.checks.append(CheckResult("off_S_bound", off is None, off,
                                     f"gamma = {_num_str(spec.gamma)}"))
    return report


# ---------------------------------------------------------------- JSON


def flow_to_json(flow, spec, report=None, rational=True):
    """Stable JSON text: spec, sorted edge list with "p/q" (or float) values, report."""
    edges = []
    for e in sorted(flow.values):
        v = flow.values[e]
        val = _num_str(v) if rational and isinstance(v, Fraction) else float(v)
        edges.append({"tail": list(e[0]), "head": list(e[1]), "value": val})
    doc = {"spec": spec.to_dict(), "edges": edges}
    if report is not None:
        doc["report"] = report.to_dict()
    return json.dumps(doc, indent=2, sort_keys=True)


def flow_from_json(text):
    """(Flow, ThetaSpec) from flow_to_json output; string values load as Fractions."""
    doc = json.loads(text)
    spec = ThetaSpec.from_dict(doc["spec"])
    values = {}
    for item in doc["edges"]:
        v = item["value"]
        values[(tuple(item["tail"]), tuple(item["head"]))] = Fraction(v) if isinstance(v, str) else v
    return Flow(theta_graph_from_values(values, spec), values), spec
