#!/usr/bin/env python3
"""Dependency DAG size and shape for synthetic rulesets across size and overlap.

Prints full vs reduced edge counts, the resulting MRF_FAST memory overhead,
and depth/degree/ancestor statistics, one CSV row per (n, density, seed).
"""

import argparse
import csv
import sys

from mrflist.classifier import POINTER_BYTES
from mrflist.dag import build_dag, dag_stats, transitive_reduction
from mrflist.workload import gen_synthetic_ruleset

COLUMNS = ["n", "density", "seed", "achieved_density", "full_edges", "reduced_edges",
           "fast_extra_bytes", "max_depth", "avg_out_degree", "avg_ancestors"]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    p.add_argument("--densities", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.3, 1.0])
    p.add_argument("--seeds", type=int, default=3)
    a = p.parse_args(argv)

    w = csv.DictWriter(sys.stdout, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for n in a.sizes:
        for d in a.densities:
            for seed in range(a.seeds):
                syn = gen_synthetic_ruleset(n, d, seed)
                full = build_dag(syn.ruleset)
                reduced = transitive_reduction(full)
                s = dag_stats(full)
                w.writerow({
                    "n": n, "density": d, "seed": seed,
                    "achieved_density": round(syn.achieved_density, 4),
                    "full_edges": len(full.edges),
                    "reduced_edges": len(reduced.edges),
                    "fast_extra_bytes": POINTER_BYTES * (len(reduced.edges) + n),
                    "max_depth": s.max_depth,
                    "avg_out_degree": round(s.avg_out_degree, 4),
                    "avg_ancestors": round(s.avg_ancestors, 4),
                })


if __name__ == "__main__":
    main()
