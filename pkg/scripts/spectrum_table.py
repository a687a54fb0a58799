"""Radial and angular eigenvalues at p = 2, with the mesh-closedness ratios."""

import argparse
import math

from extspec.eigensolve import closedness_check, isolation_gap, spectrum_p2
from extspec.radialfem import build_grid
from extspec.rearrange import ExponentContext
from extspec.weightlib import PowerLaw


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--R", type=float, default=64.0)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--lmax", type=int, default=0)
    args = ap.parse_args()

    ctx, w = ExponentContext(3, 2.0), PowerLaw(1, 4)
    res = spectrum_p2(w, ctx, build_grid(args.n, args.R), k=args.k, l_max=args.lmax)
    print(f"{'l':>3} {'lambda':>14} {'radial closed form':>20}")
    for r in res:
        l = r.diagnostics["l"]
        j = r.diagnostics["radial_index"]
        exact = ((2 * j - 1) * math.pi / (2 * (1 - 1 / args.R))) ** 2 if l == 0 else float("nan")
        print(f"{l:3d} {r.eigenvalue:14.6f} {exact:20.6f}")
    radial = [r for r in res if r.diagnostics["l"] == 0]
    if len(radial) >= 2:
        print(f"isolation gap = {isolation_gap(radial[:2]).gap:.4f}")

    fam = [spectrum_p2(w, ctx, build_grid(n, args.R), k=3) for n in (args.n // 4, args.n // 2, args.n)]
    v = closedness_check(fam)
    print("closedness ratios:", ", ".join(f"{b.ratios[0]:.3f}" for b in v.branches), "closed =", v.closed)


if __name__ == "__main__":
    main()
