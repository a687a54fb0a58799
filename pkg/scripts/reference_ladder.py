"""Principal eigenvalue of the r^-4 problem on an (R, n) ladder, with the R -> inf extrapolation."""

import argparse
import math

from extspec.eigensolve import principal, refine_and_extrapolate
from extspec.radialfem import build_grid
from extspec.rearrange import ExponentContext
from extspec.weightlib import PowerLaw


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--R", type=float, nargs="+", default=[16.0, 32.0, 64.0])
    ap.add_argument("--n", type=int, nargs="+", default=[1024, 2048, 4096])
    args = ap.parse_args()

    ctx, w = ExponentContext(3, 2.0), PowerLaw(1, 4)
    results = []
    print(f"{'R':>6} {'n':>6} {'lambda1':>14} {'closed form':>14} {'rel.err':>10}")
    for R in args.R:
        exact = (math.pi / (2 * (1 - 1 / R))) ** 2
        for n in args.n:
            r = principal(w, ctx, build_grid(n, R))
            results.append(r)
            print(f"{R:6g} {n:6d} {r.eigenvalue:14.8f} {exact:14.8f} {abs(r.eigenvalue / exact - 1):10.2e}")
    ex = refine_and_extrapolate(results)
    print(f"extrapolated lambda1 = {ex.limit:.6f}  (pi^2/4 = {math.pi**2 / 4:.6f})")
    print(f"R-rate = {ex.R_rate:.3f}" + (f", h-rate = {ex.h_rate:.3f}" if ex.h_rate is not None else ""))


if __name__ == "__main__":
    main()
