#!/usr/bin/env python3
"""Empirical MRF/OPT ratios on small instances and the tail-request adversary.

Part one: worst observed cost(MRF)/cost(OPT) over random desk-scale instances
for each alpha, next to the proven max(4, 1+alpha) bound.
Part two: the adversary that always requests the online list's tail, against a
comparator paying n + alpha per request; the ratio approaches n*alpha/(n+alpha)
from above.
"""

import argparse
import random

from mrflist.oracle import check_instance, random_instance, run_adversary


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instances", type=int, default=500)
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--max-m", type=int, default=12)
    p.add_argument("--alphas", type=int, nargs="+", default=[1, 2, 5, 8])
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args(argv)

    print("alpha  bound  worst_ratio  mean_ratio  instances")
    for alpha in a.alphas:
        rng = random.Random(a.seed)
        ratios = []
        for _ in range(a.instances):
            inst = random_instance(rng.randrange(2**32), rng.randint(2, a.max_n),
                                   rng.randint(1, a.max_m))
            chk = check_instance(inst, alpha)
            assert chk.ok, inst.to_dict()
            ratios.append(chk.mrf_cost / chk.opt_cost)
        print(f"{alpha:<6} {max(4, 1 + alpha):<6} {max(ratios):<12.3f} "
              f"{sum(ratios) / len(ratios):<11.3f} {len(ratios)}")

    print()
    print("n    alpha  mrf/comparator  lower_bound  static/comparator")
    for n in (4, 8, 16, 32):
        for alpha in (1, 4, 8, 16):
            mrf = run_adversary(n, 200, alpha)
            static = run_adversary(n, 200, alpha, policy="static")
            print(f"{n:<4} {alpha:<6} {mrf.ratio:<15.4f} {mrf.lower_bound:<12.4f} {static.ratio:.4f}")


if __name__ == "__main__":
    main()
