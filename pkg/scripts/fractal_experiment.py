#!/usr/bin/env python3
"""Survival of the BA margin and of Dirichlet improvability for theta-random points.

    python3 scripts/fractal_experiment.py configs/cantor.json --n 1000
"""
import argparse

from carpetdyn import dioph as D
from carpetdyn.ifs import load_ifs
from carpetdyn.latflow import SUP


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("ifs_file")
    ap.add_argument("--c", type=float, nargs="+", default=[0.01, 0.05])
    ap.add_argument("--T", type=int, nargs="+", default=[100, 1000, 10_000])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    tab = D.measure_zero_experiment(load_ifs(args.ifs_file), None, SUP, thresholds=tuple(args.c),
                                    T_ladder=tuple(args.T), n_samples=args.n, seed=args.seed)
    head = ",".join(f"ba_c={c},bar" for c in args.c)
    print(f"T,{head},dirichlet_eps={tab.eps:.4f},bar")
    for i, T in enumerate(args.T):
        ba = ",".join(f"{tab.ba_fraction[i, j]:.4f},{tab.ba_bar[i, j]:.4f}" for j in range(len(args.c)))
        print(f"{T},{ba},{tab.di_fraction[i]:.4f},{tab.di_bar[i]:.4f}")


if __name__ == "__main__":
    main()
