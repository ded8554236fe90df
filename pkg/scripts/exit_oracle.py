"""Monte Carlo exit frequencies vs the exact solver on the L = L~ = 4 box."""

import argparse
import json

import numpy as np
from scipy import stats

from rwrelab.environment import Dirichlet, QuenchedEnvironment
from rwrelab.lattice import BoxSpec
from rwrelab.rng import derive_seed
from rwrelab.walker import exact_exit_distribution, simulate_exits


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--envs", type=int, default=10)
    ap.add_argument("--walks", type=int, default=10**5)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    box = BoxSpec((1, 0), 4, 4)
    region = [z for z in box.bounding_sites() if box.contains(z)]
    rows = []
    for k in range(args.envs):
        env = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), derive_seed(args.seed, "env", k))
        exact = exact_exit_distribution(env, region, (0, 0))
        keys = sorted(exact)
        idx = {z: i for i, z in enumerate(keys)}
        ex, _, _ = simulate_exits(env, region, (0, 0), args.walks, 10**7,
                                  derive_seed(args.seed, "walk", k))
        counts = np.bincount([idx[tuple(x)] for x in ex.tolist()], minlength=len(keys))
        p = np.array([exact[z] for z in keys])
        z = (counts / args.walks - p) / np.sqrt(p * (1 - p) / args.walks)
        rows.append({"env": k, "max_abs_z": float(np.abs(z).max()),
                     "frac_within_4se": float((np.abs(z) <= 4).mean()),
                     "chi2_pvalue": float(stats.chisquare(counts, p * args.walks).pvalue)})
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
