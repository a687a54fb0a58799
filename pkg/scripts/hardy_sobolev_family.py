"""Hardy-Sobolev ratios over the truncated power family; the sup approaches the sharp constant 4."""

import argparse

from extspec.rearrange import ExponentContext
from extspec.weightlib import PowerLaw, truncated_power_family, verify_hardy_sobolev


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=50)
    args = ap.parse_args()

    ctx = ExponentContext(3, 2.0)
    fam = truncated_power_family(ctx, count=args.count)
    rep = verify_hardy_sobolev(fam, PowerLaw(1, 2), ctx)
    for i, r in enumerate(rep.ratios):
        print(f"{i:3d} {r:.8f}")
    print(f"sup = {rep.sup:.8f}, holds = {rep.holds}")


if __name__ == "__main__":
    main()
