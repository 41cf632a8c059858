"""Posterior of the number of variance clusters K under DPSS on scenario 2 (9 true levels).

Usage: python scripts/k_recovery.py --seeds 10 --iterations 2000
"""

import argparse

import numpy as np

from dpvarsel import analysis
from dpvarsel.datasets import ScenarioSpec, gen_scenario
from dpvarsel.gibbs import ModelConfig, run_chain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=50)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--alpha-update", default="classical", choices=["classical", "shifted"])
    args = ap.parse_args()

    modes = []
    for seed in range(1, args.seeds + 1):
        data = gen_scenario(ScenarioSpec("S2", n=args.n, p=args.p, seed=seed))
        cfg = ModelConfig.for_model(
            "dpss", iterations=args.iterations, burn_in=args.iterations // 2, seed=seed, alpha_update=args.alpha_update
        )
        kp = analysis.k_posterior(run_chain(data, cfg).K_draws)
        modes.append(kp["mode"])
        print(f"seed {seed}: K mode={kp['mode']}")
    modes = np.array(modes)
    print(f"within 9+-2: {int(np.sum(np.abs(modes - 9) <= 2))}/{modes.size}")


if __name__ == "__main__":
    main()
