"""Build theta flows for several weight vectors and audit each certificate."""

import argparse
import json
from fractions import Fraction

from rwrelab.flows import (audit_connectors, build_theta, default_radius, path_decomposition,
                           reconstruct, verify_flow_certificate)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--distance", type=int, default=40)
    args = ap.parse_args()

    cases = [((1, 1, 1, 1), 1, 6), ((1, 1, 1, 1), 2, 6),
             ((Fraction(3, 2), Fraction(2, 5), Fraction(1, 5), Fraction(2, 5)), 1, None)]
    rows = []
    for alpha, i, R in cases:
        R = default_radius(alpha, 2) if R is None else R
        D = max(args.distance, 3 * R + 4)
        x_b = (D, 0) if i == 1 else (0, D)
        th = build_theta((0, 0), x_b, i, alpha, R)
        rep = verify_flow_certificate(th.flow, th.spec)
        paths = path_decomposition(th.flow)
        rec = reconstruct(paths)
        conn = audit_connectors(th.connectors, (0, 0), x_b, th.spec.R)
        rows.append({"alpha": [str(a) for a in alpha], "i": i, "R": th.spec.R,
                     "gamma": str(th.spec.gamma), "all_passed": rep.all_passed,
                     "support": len(th.flow.support()), "support_bound": th.spec.support_bound(),
                     "paths": len(paths), "round_trip_exact": rec == th.flow.support(),
                     "connectors": {k: bool(v[0]) for k, v in conn.items()}})
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
