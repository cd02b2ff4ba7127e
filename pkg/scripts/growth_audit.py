#!/usr/bin/env python3
"""Per-place growth rates log||Ad(h_bar word)||/n for a bundled IFS.

    python3 scripts/growth_audit.py configs/two_thirds.json --n 5 10 20 40
"""
import argparse
import math
from collections import defaultdict

from carpetdyn.ifs import load_ifs
from carpetdyn.sadic import build_walk
from carpetdyn.sadic.growth import growth_audit


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("ifs_file")
    ap.add_argument("--n", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--words", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    walk = build_walk(load_ifs(args.ifs_file))
    audit = growth_audit(walk, args.n, n_words=args.words, seed=args.seed)
    rates = defaultdict(list)
    for row in audit.rows:
        rates[(str(row.place), row.n)].append(row.log_norm / row.n)
    print(f"# rho={walk.ifs.rho}, log 1/|rho|_inf = {-math.log(abs(float(walk.ifs.rho))):.6f}")
    print("place,n,min_rate,max_rate")
    for (place, n), vals in sorted(rates.items(), key=lambda kv: (kv[0][0] != "inf", kv[0])):
        print(f"{place},{n},{min(vals):.6f},{max(vals):.6f}")


if __name__ == "__main__":
    main()
