"""Geweke joint-distribution check of the two alpha updates (classical vs shifted).

Usage: python scripts/alpha_geweke.py --draws 20000
"""

import argparse

import numpy as np

from dpvarsel.dp import ALPHA_UPDATES
from dpvarsel.geweke import geweke_test
from dpvarsel.gibbs import ModelConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=20000)
    ap.add_argument("--model", default="dpss", choices=["dpss", "dphs"])
    args = ap.parse_args()

    X = np.random.default_rng(0).standard_normal((8, 3))
    for variant in ALPHA_UPDATES:
        res = geweke_test(ModelConfig.for_model(args.model, iterations=2, alpha_update=variant), X, args.draws, seed=5)
        print(f"{variant}: {res.summary()}")


if __name__ == "__main__":
    main()
