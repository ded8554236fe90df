"""Non-front exit estimates over L for a Dirichlet law with a weak opposite weight.

Sweeps L in {4, 6, 8, 10} with L~ = min(70 L^3, 500) along a tilted direction
l = (3, 1)/sqrt(10) and along e2, then the uniform law along e1. The e2 sweep
is shown for contrast: the drift toward e2 is so strong that no walk leaves
through a non-front face, so the estimate sits at zero and carries no trend.
"""

import argparse
import json
import math

from rwrelab.conditions import c0_log10, pm_sweep
from rwrelab.environment import Dirichlet, Uniform


def summarize(reps, decreasing):
    return {"L": [r.L for r in reps], "p_hat": [r.p_hat for r in reps],
            "ci": [[r.ci_low, r.ci_high] for r in reps], "verdict": [r.verdict for r in reps],
            "exact_annealed": [r.exact_annealed for r in reps],
            "strictly_decreasing": decreasing}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walks", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=8)
    ap.add_argument("--exact-envs", type=int, default=10)
    args = ap.parse_args()

    law = Dirichlet((1, 1, 1, 0.05))
    Ls = [4, 6, 8, 10]
    tilted = (3 / math.sqrt(10), 1 / math.sqrt(10))
    out = {
        "tilted": summarize(*pm_sweep(law, tilted, Ls, 1, args.walks, args.seed,
                                      exact_envs=args.exact_envs)),
        "e2": summarize(*pm_sweep(law, (0, 1), Ls, 1, args.walks, args.seed)),
        "uniform_e1": summarize(*pm_sweep(Uniform(), (1, 0), Ls, 35, args.walks, args.seed,
                                          exact_envs=1)),
        "log10_c0_d2": c0_log10(2),
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
