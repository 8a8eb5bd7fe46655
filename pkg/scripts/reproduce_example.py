"""Print the exact A^{1,0} window, its inverse and the diag(0.5, 0.3, 0.2) recovery."""
import argparse
import math
from fractions import Fraction

import numpy as np

from phasetomo.recon_single import (
    analytic_profiles,
    build_coefficient_matrix,
    moments_from_profile,
    reconstruct_band_exact,
)
from phasetomo.states import DensityMatrix


def show(rows):
    for row in rows:
        print("  " + "  ".join(f"{str(v):>7}" for v in row))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=6)
    args = ap.parse_args()

    cm = build_coefficient_matrix(1, 0, args.size)
    print("A (s=1, l=0):")
    show(cm.exact_array())
    print("B = A^-1:")
    show(cm.exact_inverse())

    rho = DensityMatrix(np.diag([0.5, 0.3, 0.2]))
    m = moments_from_profile(analytic_profiles(rho, 1)[0], 3)
    print("moments from the analytic profile:", np.round(m.entries.real, 14))
    exact = [Fraction(float(v)).limit_denominator(1000) for v in m.entries.real]
    alpha = [c / math.factorial(n) for n, c in enumerate(reconstruct_band_exact(1, 0, exact))]
    print("recovered diagonal:", [str(a) for a in alpha])


if __name__ == "__main__":
    main()
