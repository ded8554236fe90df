"""Command-line front end: every command reads one JSON config and writes CSV/JSON outputs.

Exit codes: 0 success, 2 configuration error, 3 insufficient data,
4 certificate failure.
"""

import argparse
import csv
from fractions import Fraction
import json
import math
from pathlib import Path
import random
import sys

import numpy as np

from . import __version__
from .conditions import ParameterError, hypothesis_report, pm_sweep
from .config import ConfigError, ENV_PREFIX, load_config
from .environment import CRExample, LawError, iid_sites, law_from_dict
from .flows import (DemandProblem, DirectedGraph, FlowError, GeometryError, Infeasible,
                    build_theta, check_demand_flow, cut_condition_holds, feasible_flow,
                    flow_from_json, flow_to_json, verify_flow_certificate)
from .lattice import DimensionError, NormalizationError
from .regeneration import (InsufficientData, RegenConfig, regeneration_battery,
                           renewal_statistics, split_half_gaps)
from .rng import derive_seed
from .tails import hill_plot, pareto_samples, tail_exponent, trap_exit_tail

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CERT = 0, 2, 3, 4

SCHEMAS = {
    "samples.csv": [("omega_j", "transition probability toward direction j (1-based; j > d is -e_{j-d})")],
    "pm_sweep.csv": [("L", "box half-length along l"), ("L_tilde", "transverse half-width"),
                     ("M", "polynomial order"), ("n_walks", "annealed walks"),
                     ("p_hat", "estimated non-front exit probability"),
                     ("ci_low", "Wilson 95% lower bound"), ("ci_high", "Wilson 95% upper bound"),
                     ("threshold", "L^-M"), ("verdict", "pass, fail or inconclusive"),
                     ("censored", "walks still inside at the horizon (counted as non-front)"),
                     ("exact_annealed", "exact non-front mass averaged over sampled environments")],
    "regenerations.csv": [("walker", "walker id"), ("k", "regeneration index, 1-based"),
                          ("tau", "regeneration time"), ("x_j", "position coordinate j at tau")],
    "survival.csv": [("u", "time level"), ("empirical_survival", "estimated P(T > u)"),
                     ("n_at_risk", "samples with T > u")],
    "hill_plot.csv": [("k", "top order statistics used"), ("alpha", "Hill tail index"),
                      ("se", "alpha / sqrt(k)")],
}


# ---------------------------------------------------------------- output helpers


class Output:
    def __init__(self, out_dir, cfg):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []
        self.json("config.resolved.json", cfg.to_dict())

    def json(self, name, obj):
        text = json.dumps(_plain(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        (self.dir / name).write_text(text, encoding="utf-8")
        self.written.append(name)

    def text(self, name, text):
        (self.dir / name).write_text(text, encoding="utf-8")
        self.written.append(name)

    def csv(self, name, header, rows):
        with open(self.dir / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([_cell(v) for v in r])
        self.written.append(name)

    def schema(self):
        used = {n: [{"column": c, "description": d} for c, d in SCHEMAS[n]]
                for n in self.written if n in SCHEMAS}
        self.json("schema.json", used)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return "" if v is None else v


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


# ---------------------------------------------------------------- commands


def cmd_env_sample(cfg, out, args):
    law = law_from_dict(cfg.law)
    n = int(cfg.env_sample.n)
    w = iid_sites(law, n, derive_seed(cfg.seed, "env-sample"))
    d = law.d
    if cfg.env_sample.write_samples:
        out.csv("samples.csv", [f"omega_{j + 1}" for j in range(2 * d)], w.tolist())
    summary = {"n": n, "law": cfg.law, "mean": w.mean(axis=0), "variance": w.var(axis=0, ddof=1),
               "mean_se": w.std(axis=0, ddof=1) / math.sqrt(n),
               "row_sum_max_error": float(np.abs(w.sum(axis=1) - 1).max())}
    if isinstance(law, CRExample):
        summary["max_abs_omega1_minus_2_omega3"] = float(np.abs(w[:, 0] - 2 * w[:, 2]).max())
    out.json("summary.json", summary)
    return EXIT_OK


def cmd_pm_check(cfg, out, args):
    law = law_from_dict(cfg.law)
    p = cfg.pm
    reps, decreasing = pm_sweep(law, p.l, p.L, p.M, p.n_walks, cfg.seed, p.L_tilde_cap,
                                p.exact_envs)
    out.csv("pm_sweep.csv", [c for c, _ in SCHEMAS["pm_sweep.csv"]],
            [(r.L, r.L_tilde, r.M, r.n_walks, r.p_hat, r.ci_low, r.ci_high, r.threshold,
              r.verdict, r.censored, r.exact_annealed) for r in reps])
    out.json("pm_report.json", {"reports": [r.to_dict() for r in reps],
                                "strictly_decreasing_in_L": decreasing, "note": reps[0].note})
    return EXIT_OK


def _battery(cfg, law, rc):
    return regeneration_battery(law, rc, int(cfg.regen.n_walks), cfg.seed, threads=cfg.threads)


def _regen_config(cfg):
    r = cfg.regen
    return RegenConfig(tuple(r.l), r.a, int(r.horizon), r.depth)


def cmd_regen(cfg, out, args):
    law = law_from_dict(cfg.law)
    rc = _regen_config(cfg)
    recs = _battery(cfg, law, rc)
    rows = [(w, k + 1, int(t), *map(int, x)) for w, r in enumerate(recs)
            for k, (t, x) in enumerate(zip(r.times, r.positions))]
    out.csv("regenerations.csv", ["walker", "k", "tau"] + [f"x_{j + 1}" for j in range(rc.d)], rows)
    n_cens = sum(r.censored_tail for r in recs)
    try:
        st = renewal_statistics(recs)
    except InsufficientData as exc:
        raise InsufficientData(f"{exc}; {n_cens} of {len(recs)} records censored") from None
    direct = np.array([r.final_position / rc.horizon for r in recs])
    doc = {"renewal": st.to_dict(),
           "velocity_ci95": [(st.velocity - 1.96 * st.velocity_se).tolist(),
                             (st.velocity + 1.96 * st.velocity_se).tolist()],
           "direct_velocity": direct.mean(axis=0), "direct_se": direct.std(axis=0, ddof=1)
           / math.sqrt(len(recs)) if len(recs) > 1 else None,
           "censored_records": n_cens, "records": len(recs), "a": rc.a, "depth": rc.depth}
    try:
        doc["split_half"] = dict(zip(("mean_first", "mean_second", "combined_se"),
                                     split_half_gaps(recs)))
    except InsufficientData:
        doc["split_half"] = None
    out.json("velocity.json", doc)
    return EXIT_OK


def _survival_rows(x, grid):
    xs = np.sort(x)
    rows = []
    for u in grid:
        at_risk = int(xs.size - np.searchsorted(xs, u, side="right"))
        rows.append((float(u), at_risk / xs.size, at_risk))
    return rows


def cmd_tail(cfg, out, args):
    t = cfg.tail
    censored = None
    if args.pareto_self_test or t.source == "pareto":
        x = pareto_samples(t.pareto_alpha, int(t.n), derive_seed(cfg.seed, "pareto"))
        origin = {"source": "pareto", "alpha": t.pareto_alpha}
    elif t.source == "file":
        if not t.file:
            raise ConfigError("tail.file is required when tail.source is file")
        x = np.loadtxt(t.file, delimiter=",", ndmin=1)
        origin = {"source": "file", "file": t.file}
    else:
        law = law_from_dict(cfg.law)
        rc = _regen_config(cfg)
        recs = _battery(cfg, law, rc)
        x = np.array([r.times[0] if len(r.times) else rc.horizon for r in recs], dtype=float)
        censored = np.array([r.censored_tail for r in recs])
        origin = {"source": "regen", "quantity": "tau_1", "censored": int(censored.sum())}
        if (~censored).sum() == 0:
            raise InsufficientData(f"all {len(recs)} records censored")
    est = tail_exponent(x, censored, method=t.method, k=t.k, grid=t.grid,
                        seed=derive_seed(cfg.seed, "boot"))
    doc = {"estimate": est.to_dict(), "origin": origin}
    if est.method == "hill":
        out.csv("hill_plot.csv", ["k", "alpha", "se"], hill_plot(x, censored))
    grid = np.geomspace(max(x.min(), 1e-12), x.max(), 40)
    out.csv("survival.csv", ["u", "empirical_survival", "n_at_risk"], _survival_rows(x, grid))
    out.json("tail.json", doc)
    return EXIT_OK


def cmd_trap_tail(cfg, out, args):
    law = law_from_dict(cfg.law)
    t = cfg.trap
    if not 1 <= t.e0 <= 2 * law.d:
        raise ConfigError(f"trap.e0 must lie in 1..{2 * law.d}")
    res = trap_exit_tail(law, t.e0 - 1, None, int(t.n_samples), derive_seed(cfg.seed, "trap"),
                         tuple(t.fit_range), int(t.n_batches))
    out.csv("survival.csv", ["u", "empirical_survival", "n_at_risk"], res.csv_rows())
    out.json("trap.json", {"estimate": res.estimate.to_dict(),
                           "predicted_exponent": res.predicted_exponent,
                           "closed_form_exponent": res.closed_form_exponent,
                           "n_samples": int(t.n_samples), "e0": t.e0})
    return EXIT_OK


def _fraction(v):
    return Fraction(str(v)) if not isinstance(v, str) else Fraction(v)


def feasibility_self_test(n_cases, seed):
    """Solver verdict vs the exhaustive cut oracle on random graphs with |V| <= 7."""
    rs = random.Random(seed)
    agree, feasible, flows_ok = 0, 0, True
    for _ in range(n_cases):
        n = rs.randint(2, 7)
        V = list(range(n))
        E = [(u, v) for u in V for v in V if u != v and rs.random() < 0.5]
        caps = {e: Fraction(rs.randint(0, 6), rs.randint(1, 4)) for e in E}
        dem = {v: Fraction(rs.randint(0, 3), rs.randint(1, 4)) for v in V}
        prob = DemandProblem(DirectedGraph(tuple(V), tuple(E)), caps, 0, dem)
        res = feasible_flow(prob, exact=True)
        ok = not isinstance(res, Infeasible)
        feasible += ok
        if ok:
            flows_ok &= check_demand_flow(prob, res) == (True, True)
        oracle = cut_condition_holds(prob)
        agree += (ok == oracle == cut_condition_holds(prob, reachable_only=True))
    return {"cases": n_cases, "agree": agree, "feasible": feasible, "flows_exact": flows_ok}


def cmd_flow_build(cfg, out, args):
    f = cfg.flow
    alpha = tuple(_fraction(a) for a in f.alpha)
    theta = build_theta(tuple(f.x_a), tuple(f.x_b), int(f.i), alpha, f.R, exact=bool(f.exact))
    rep = verify_flow_certificate(theta.flow, theta.spec)
    out.text("flow.json", flow_to_json(theta.flow, theta.spec, rep) + "\n")
    doc = {"report": rep.to_dict(), "connectors": {"method": theta.connectors.method,
                                                   "K1": theta.connectors.K1,
                                                   "K2": theta.connectors.K2}}
    if args.self_test:
        doc["feasibility_self_test"] = feasibility_self_test(int(f.self_test_cases), cfg.seed)
    out.json("certificate.json", doc)
    st = doc.get("feasibility_self_test")
    if not rep.all_passed or (st and st["agree"] != st["cases"]):
        _report_failures(rep)
        return EXIT_CERT
    return EXIT_OK


def _report_failures(rep):
    for c in rep.checks:
        if not c.passed:
            print(f"certificate check failed: {c.name} (witness {c.witness}) {c.detail}",
                  file=sys.stderr)


def cmd_flow_verify(cfg, out, args):
    path = args.flow or cfg.flow.input
    if not path:
        raise ConfigError("flow-verify needs --flow PATH or flow.input")
    try:
        flow, spec = flow_from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot load flow file {path}: {exc}") from None
    rep = verify_flow_certificate(flow, spec)
    out.json("verify.json", rep.to_dict())
    if not rep.all_passed:
        _report_failures(rep)
        return EXIT_CERT
    return EXIT_OK


def cmd_report(cfg, out, args):
    law = law_from_dict(cfg.law)
    r = cfg.report
    beta = getattr(law, "beta", None)
    alpha = None if beta is not None else cfg.law.get("alpha")
    if beta is None and alpha is None:
        raise ConfigError("report needs a Dirichlet law or law.alpha weights")
    rep = hypothesis_report(beta=beta, alpha=alpha, law=law, v_hat=r.v_hat, epsilon=r.epsilon,
                            eta_alpha=r.eta_alpha, eta_samples=int(r.eta_samples), seed=cfg.seed)
    out.json("report.json", rep.to_dict())
    return EXIT_OK


COMMANDS = {"env-sample": cmd_env_sample, "pm-check": cmd_pm_check, "regen": cmd_regen,
            "tail": cmd_tail, "trap-tail": cmd_trap_tail, "flow-build": cmd_flow_build,
            "flow-verify": cmd_flow_verify, "report": cmd_report}


def build_parser():
    p = argparse.ArgumentParser(prog="rwrelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rwrelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help=f"JSON config file (env {ENV_PREFIX}CONFIG)")
        s.add_argument("--seed", type=int, help=f"master seed override (env {ENV_PREFIX}SEED)")
        s.add_argument("--threads", type=int, help=f"worker threads (env {ENV_PREFIX}THREADS)")
        s.add_argument("--out", help=f"output directory (env {ENV_PREFIX}OUT)")
        if name == "tail":
            s.add_argument("--pareto-self-test", action="store_true",
                           help="estimate the tail of synthetic Pareto(tail.pareto_alpha) samples")
        if name == "flow-build":
            s.add_argument("--self-test", action="store_true",
                           help="also compare feasible_flow with the exhaustive cut oracle")
        if name == "flow-verify":
            s.add_argument("--flow", help="flow JSON written by flow-build")
    return p


def main(argv=None, environ=None):
    import os

    environ = os.environ if environ is None else environ
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config or environ.get(ENV_PREFIX + "CONFIG"),
                          {"seed": args.seed, "threads": args.threads, "out": args.out}, environ)
        out = Output(cfg.out, cfg)
        code = COMMANDS[args.command](cfg, out, args)
        out.schema()
        return code
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FlowError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (ConfigError, LawError, ParameterError, GeometryError, DimensionError,
            NormalizationError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
