"""Relative Frobenius kernel error of every feature map on synthetic data.

Reports median error over seeds for widths D = k*d. For S-FS the S-FS total
width (D + 4d + 2 columns) is printed so it can be matched against RFF.
"""
import argparse

import numpy as np

from fsquad.analysis import frobenius_error
from fsquad.features import approx_gram, transform
from fsquad.kernels import KernelSpec, gram_matrix
from fsquad.methods import build_feature_map, check_methods, is_deterministic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--kernel", default="gaussian", choices=["gaussian", "arccos0", "arccos1"])
    ap.add_argument("--sigma2", type=float, default=1.0)
    ap.add_argument("--methods", default="DFS3,DFS5,SFS,RFF,ORF,ROM,QMC,GQ,SGQ,SSR")
    ap.add_argument("--multipliers", default="2,4,8")
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    d = args.d
    kernel = KernelSpec(args.kernel, args.sigma2, d)
    X = np.random.default_rng(0).random((args.n, d))
    K = gram_matrix(kernel, X)
    print(f"{'method':>6} {'D':>5} {'width':>6} {'median err':>11}")
    for tag in check_methods(args.methods.split(",")):
        for D in (d * int(k) for k in args.multipliers.split(",")):
            seeds = 1 if is_deterministic(tag, d, D) else args.seeds
            errs, width = [], 0
            for s in range(seeds):
                F = transform(build_feature_map(tag, d, kernel, D, seed=s), X)
                width = F.values.shape[1]
                errs.append(frobenius_error(K, approx_gram(F)))
            print(f"{tag:>6} {D:>5} {width:>6} {np.median(errs):>11.4e}")
            if is_deterministic(tag, d, D):
                break


if __name__ == "__main__":
    main()
