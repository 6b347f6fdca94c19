#!/usr/bin/env python3
"""Watch synthesized-channel entropy polarize along random tree paths.

Prints the low/middle/high census after n steps and one sample trajectory.
With --search the kernel is re-searched at every step instead of fixed.
"""

import argparse

import numpy as np

from qpolar.channel import bec, bsc, zchannel
from qpolar.gf import arikan_kernel, field_make
from qpolar.kernsearch import FixedKernel, SearchKernels
from qpolar.procsim import polarization_stats, sample_path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--channel", choices=["bec", "bsc", "zchan"], default="bec")
    ap.add_argument("--noise", type=float, default=0.5)
    ap.add_argument("--depth", type=int, default=10)
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--search", action="store_true",
                    help="certified per-node kernel search (ell=3) instead of the fixed kernel")
    args = ap.parse_args()

    W = {"bec": bec, "bsc": bsc, "zchan": zchannel}[args.channel](args.noise)
    if args.search:
        policy = SearchKernels(ell=3, budget=200)
    else:
        policy = FixedKernel(arikan_kernel(field_make(2)))

    stats = polarization_stats(W, policy, n=args.depth, paths=args.paths,
                               rng=np.random.default_rng(args.seed))
    print(f"{args.paths} paths, depth {args.depth}: "
          f"low {stats['frac_low']:.3f}  middle {stats['frac_middle']:.3f}  "
          f"high {stats['frac_high']:.3f}  (exact={stats['exact']})")

    trace = sample_path(W, policy, n=args.depth, rng=np.random.default_rng(args.seed))
    print("one trajectory (depth, branch, entropy):")
    for step in trace.steps:
        bar = "#" * int(round(40 * step.H))
        print(f"  {step.depth:2d}  {step.position}  {step.H:8.5f} {bar}")


if __name__ == "__main__":
    main()
