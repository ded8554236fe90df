"""Median X_n . e1 / n for the CR example across seeds, against a 1/log n decay.

A two-site vertical trap with both phi small holds the walk for a time whose
tail is ~ 1/t, so the speed decays like 1/log n and the ratio between
n = 1e4 and 1e5 sits near log(1e5)/log(1e4) = 1.25.
"""

import argparse
import json
import math

import numpy as np

from rwrelab.environment import CRExample, Dirichlet
from rwrelab.walker import annealed_positions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walks", type=int, default=200)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    ns = [10**3, 10**4, 10**5]
    med = []
    for s in range(args.seeds):
        X = annealed_positions(CRExample(), args.walks, ns, 1000 + s)
        med.append([float(np.median(X[:, j, 0])) / n for j, n in enumerate(ns)])
    med = np.array(med)
    ballistic = annealed_positions(Dirichlet((1.5, 0.4, 0.2, 0.4)), args.walks, ns, 1)
    out = {"n": ns, "median_speed_mean_over_seeds": med.mean(axis=0).tolist(),
           "ratio_1e4_1e5": {"mean": float((med[:, 1] / med[:, 2]).mean()),
                             "max": float((med[:, 1] / med[:, 2]).max())},
           "ratio_1e3_1e4": float((med[:, 0] / med[:, 1]).mean()),
           "log_ratio_prediction": [math.log(1e4) / math.log(1e3), math.log(1e5) / math.log(1e4)],
           "ballistic_contrast": [float(np.median(ballistic[:, j, 0])) / n
                                  for j, n in enumerate(ns)]}
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
