#!/usr/bin/env python3
"""Siegel mean against t for the Cantor measure, with a Lebesgue control.

Shows how slowly the finite-t mean approaches vol(B_R) when x is drawn from
a fractal measure, compared to x drawn uniformly from [0, 1].

    python3 scripts/siegel_sweep.py --ts 2 4 6 8 10 --n 10000
"""
import argparse

from carpetdyn import ifs as I
from carpetdyn import latflow as L


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ts", type=float, nargs="+", default=[2, 4, 6, 8, 10])
    ap.add_argument("--R", type=float, default=1.5)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    panels = {"cantor": I.middle_thirds(), "lebesgue": I.lebesgue_interval()}
    print("measure,t,estimate,clt_bar,target,rel_err")
    for name, ifs in panels.items():
        for t in args.ts:
            rep = L.siegel_statistic(ifs, t, args.R, args.n, seed=args.seed, workers=args.workers)
            target = rep.extra["target"]
            print(f"{name},{t},{rep.estimate:.5f},{rep.clt_bar:.5f},{target:.5f},"
                  f"{(rep.estimate - target) / target:+.4f}")


if __name__ == "__main__":
    main()
