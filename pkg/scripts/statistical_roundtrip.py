"""Repeated sampled round trips: z-scores of the diagonal and error-bound coverage."""
import argparse

import numpy as np

from phasetomo.pipeline import EstimationConfig, roundtrip


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--count", type=int, default=100_000)
    ap.add_argument("--method", choices=["tomogram", "single"], default="tomogram")
    ap.add_argument("--bins", type=int, default=32)
    args = ap.parse_args()

    cfg = EstimationConfig(radial_bins=args.bins)
    z, covered, passed = [], 0, 0
    for seed in range(args.runs):
        _, _, rep = roundtrip(args.dim, seed, args.method, count=args.count, cfg=cfg)
        err = np.array(rep.gate["diagonal_error"])
        se = np.array(rep.gate["diagonal_stderr"])
        z.extend(err / se)
        covered += int(np.sum(err <= np.diagonal(np.array(rep.error_bounds))))
        passed += rep.gate["passed"]
    z = np.array(z)
    print(f"runs passing the 5-sigma gate: {passed}/{args.runs}")
    print(f"diagonal entries inside the reported bound: {covered}/{z.size}")
    print(f"|z| median {np.median(z):.3f}, rms {np.sqrt(np.mean(z**2)):.3f}, max {z.max():.3f}")


if __name__ == "__main__":
    main()
