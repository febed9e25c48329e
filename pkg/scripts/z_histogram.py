"""Histogram of scaled pairwise distances, and the share inside r_max."""
import argparse
import json

import numpy as np

from fsquad.analysis import z_histogram
from fsquad.krr import minmax_normalize, parse_libsvm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dataset", default="", help="libsvm file; default is uniform synthetic data")
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--sigma2", type=float, default=1.0)
    ap.add_argument("--bins", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.dataset:
        X = minmax_normalize(parse_libsvm(args.dataset))[0].X
    else:
        X = np.random.default_rng(args.seed).random((2000, args.d))
    h = z_histogram(X, bins=args.bins, seed=args.seed, sigma2=args.sigma2)
    print(json.dumps(h.to_dict()))
    print(f"fraction of pairs with z <= r_max ({h.rmax:.4f}): {h.fraction_below_rmax:.3f}")


if __name__ == "__main__":
    main()
