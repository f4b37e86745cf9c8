"""Benchmark and verification command line.

Exit codes: 0 ok, 1 usage, 2 verification failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .adjusting_list import DagDependencies, ListConfig, mrf_access
from .classifier import Classifier, Variant
from .dag import build_dag, dag_stats, format_edges, transitive_reduction, validate_feasible
from .oracle import (
    MAX_OPT_NODES,
    Instance,
    check_instance,
    move_to_front,
    random_instance,
    shrink_requests,
)
from .rules import ParseError, Ruleset, format_classbench_ruleset, parse_classbench_ruleset
from .workload import (
    LocalityParams,
    format_trace,
    gen_synthetic_ruleset,
    generate_trace,
    parse_classbench_trace,
)

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3

METRIC_COLUMNS = [
    "variant", "ruleset", "n_rules", "locality", "locality_param", "seed", "reps",
    "packets", "avg_lookup_nodes", "avg_swap_nodes", "avg_counted_cost",
    "memory_bytes", "dag_edges", "dag_reduced_edges", "dag_max_depth",
    "dag_avg_out_degree", "dag_avg_ancestors",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# experiment specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RulesetSource:
    path: Optional[str] = None
    n: int = 0
    density: float = 0.0
    seed: int = 0

    @property
    def label(self) -> str:
        return self.path if self.path else f"synthetic:{self.n},{self.density},{self.seed}"

    def load(self) -> Ruleset:
        if self.path:
            return parse_classbench_ruleset(Path(self.path).read_text(encoding="utf-8"))
        return gen_synthetic_ruleset(self.n, self.density, self.seed).ruleset


@dataclass(frozen=True)
class TraceSource:
    path: Optional[str] = None
    kind: str = "UNIFORM"
    param: float = 1.0
    seed: int = 0
    packets: int = 10000

    @property
    def label(self) -> str:
        return "file" if self.path else self.kind.lower()

    def params(self, rep: int) -> LocalityParams:
        kw = {"ZIPF": {"zipf_s": self.param}, "RUNS": {"run_len_mean": self.param}}
        return LocalityParams(self.kind, seed=self.seed + rep, **kw.get(self.kind, {}))

    def load(self, rs: Ruleset, rep: int) -> list:
        if self.path:
            trace = parse_classbench_trace(Path(self.path).read_text(encoding="utf-8"), rs)
        else:
            trace = generate_trace(rs, self.params(rep), self.packets)
        return trace.packets()


@dataclass
class ExperimentSpec:
    rulesets: list
    traces: list
    variants: list = field(default_factory=lambda: list(Variant))
    reps: int = 32
    alpha: float = 5
    fmt: str = "csv"
    out: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        if not self.variants:
            raise UsageError("at least one variant is required")
        if self.reps < 1:
            raise UsageError("--reps must be >= 1")
        if self.alpha < 1:
            raise UsageError("--alpha must be >= 1")


def _point_rows(args) -> list[dict]:
    rsrc, tsrc, variants, reps, alpha = args
    rs = rsrc.load()
    full = build_dag(rs)
    reduced = transitive_reduction(full)
    stats = dag_stats(full)
    rows = []
    traces = [tsrc.load(rs, rep) for rep in range(reps)]
    for variant in variants:
        cls = Classifier(rs, variant, alpha=alpha, dag=full)
        lookup = swaps = cost = 0.0
        packets = 0
        for packets_rep in traces:
            cls.reset()
            for pkt in packets_rep:
                cls.classify(pkt)
            if cls.packets:
                lookup += cls.totals.lookup_nodes / cls.packets
                swaps += cls.totals.swap_nodes / cls.packets
                cost += cls.totals.counted_cost / cls.packets
            packets = cls.packets
        rows.append({
            "variant": variant.value,
            "ruleset": rsrc.label,
            "n_rules": len(rs),
            "locality": tsrc.label,
            "locality_param": tsrc.param if not tsrc.path else "",
            "seed": tsrc.seed if not tsrc.path else "",
            "reps": reps,
            "packets": packets,
            "avg_lookup_nodes": round(lookup / reps, 6),
            "avg_swap_nodes": round(swaps / reps, 6),
            "avg_counted_cost": round(cost / reps, 6),
            "memory_bytes": cls.memory_footprint(),
            "dag_edges": len(full.edges),
            "dag_reduced_edges": len(reduced.edges),
            "dag_max_depth": stats.max_depth,
            "dag_avg_out_degree": round(stats.avg_out_degree, 6),
            "dag_avg_ancestors": round(stats.avg_ancestors, 6),
        })
    return rows


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    points = [(r, t, spec.variants, spec.reps, spec.alpha)
              for r in spec.rulesets for t in spec.traces]
    if spec.jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            chunks = list(pool.map(_point_rows, points))
    else:
        chunks = [_point_rows(p) for p in points]
    order = {v.value: i for i, v in enumerate(Variant)}
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["ruleset"], r["n_rules"], r["locality"],
                             str(r["locality_param"]), str(r["seed"]), order[r["variant"]]))
    return rows


def format_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(r, sort_keys=False) + "\n" for r in rows)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=METRIC_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------


@dataclass
class CheckOutcome:
    name: str
    cases: int = 0
    failure: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.failure is None


def _mrf_replay_failure(inst: Instance, recurse: bool) -> Optional[str]:
    """Swap bound (at most the pre-access position) and feasibility after every access."""
    cfg = ListConfig(inst.initial)
    provider = DagDependencies(inst.dag)
    for t, y in enumerate(inst.requests):
        rec = mrf_access(cfg, provider, y, recurse=recurse)
        if rec.transpositions > rec.position:
            return f"request {t}: {rec.transpositions} transpositions > position {rec.position}"
        if not validate_feasible(inst.dag, cfg):
            return f"request {t}: infeasible configuration {cfg.order}"
    return None


def verify(max_n: int = 5, instances: int = 200, max_m: int = 12, alphas=(1, 2, 5),
           seed: int = 0, edge_prob: float = 0.3, inject_fault: bool = False) -> list[CheckOutcome]:
    if max_n > MAX_OPT_NODES:
        raise UsageError(f"--max-n {max_n} exceeds the brute-force limit of {MAX_OPT_NODES}")
    if max_n < 2:
        raise UsageError("--max-n must be >= 2")
    recurse = not inject_fault
    rng = random.Random(seed)
    cases = [(rng.randrange(2**32), rng.randint(2, max_n), rng.randint(1, max_m))
             for _ in range(instances)]
    outcomes = []

    bound = CheckOutcome("swap_bound_and_feasibility")
    for s, n, m in cases:
        inst = random_instance(s, n, m, edge_prob)
        msg = _mrf_replay_failure(inst, recurse)
        bound.cases += 1
        if msg:
            bound.failure = {"detail": msg, **inst.to_dict()}
            break
    outcomes.append(bound)

    mtf = CheckOutcome("mtf_equivalence")
    for s, n, m in cases:
        inst = random_instance(s, n, m, edge_prob=0.0)
        cfg = ListConfig(inst.initial)
        provider = DagDependencies(inst.dag)
        expected = move_to_front(inst.initial, inst.requests)
        mtf.cases += 1
        for t, y in enumerate(inst.requests):
            mrf_access(cfg, provider, y, recurse=recurse)
            if cfg.order != expected[t]:
                mtf.failure = {"detail": f"request {t}: {cfg.order} != {expected[t]}",
                               **inst.to_dict()}
                break
        if mtf.failure:
            break
    outcomes.append(mtf)

    for alpha in alphas:
        comp = CheckOutcome(f"competitive_alpha_{alpha}")
        audit = CheckOutcome(f"audits_alpha_{alpha}")
        for s, n, m in cases:
            inst = random_instance(s, n, m, edge_prob)
            res = check_instance(inst, alpha, recurse=recurse)
            comp.cases += 1
            audit.cases += len(res.audits)
            if not res.competitive_ok and comp.failure is None:
                small = shrink_requests(
                    inst, lambda i: not check_instance(i, alpha, recurse).competitive_ok)
                r2 = check_instance(small, alpha, recurse)
                comp.failure = {"detail": f"MRF {r2.mrf_cost} > {r2.bound} x OPT {r2.opt_cost}",
                                "alpha": alpha, **small.to_dict()}
            if not res.audits_ok and audit.failure is None:
                small = shrink_requests(
                    inst, lambda i: not check_instance(i, alpha, recurse).audits_ok)
                bad = next(a for a in check_instance(small, alpha, recurse).audits if not a.ok)
                audit.failure = {"detail": _audit_detail(bad), "alpha": alpha, **small.to_dict()}
            if comp.failure and audit.failure:
                break
        outcomes += [comp, audit]
    return outcomes


def _audit_detail(a) -> str:
    return (f"t={a.t} node={a.node} k={a.k} l={a.l} created={a.created} "
            f"destroyed={a.destroyed} mrf={a.mrf_cost} opt={a.opt_cost} "
            f"dphi={a.phi_after - a.phi_before}")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _synthetic(text: str) -> RulesetSource:
    try:
        n, density, seed = text.split(",")
        return RulesetSource(n=int(n), density=float(density), seed=int(seed))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n,density,seed, got {text!r}") from None


def _gen(text: str) -> tuple:
    parts = text.split(",")
    try:
        if len(parts) == 2:
            kind, seed = parts
            param = 1.0
        else:
            kind, param, seed = parts
        kind = kind.strip().upper()
        if kind not in ("ZIPF", "RUNS", "UNIFORM"):
            raise ValueError
        return kind, float(param), int(seed)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected kind,param,seed with kind in zipf|runs|uniform, got {text!r}") from None


def _variants(text: str) -> list:
    if text.strip().lower() == "all":
        return list(Variant)
    try:
        return [Variant.parse(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown variant in {text!r}") from None


def _alphas(text: str) -> list:
    try:
        return [int(a) if a.strip().isdigit() else float(a) for a in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from None


def _add_ruleset_args(p, multiple: bool = False):
    g = p.add_mutually_exclusive_group(required=True)
    act = "append" if multiple else "store"
    g.add_argument("--ruleset", action=act, help="ClassBench filter file")
    g.add_argument("--synthetic", type=_synthetic, action=act, metavar="N,DENSITY,SEED",
                   help="synthetic ruleset parameters")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mrflist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="classification experiment, one row per variant x point")
    _add_ruleset_args(run, multiple=True)
    tg = run.add_mutually_exclusive_group(required=True)
    tg.add_argument("--trace", help="trace file (packet lines)")
    tg.add_argument("--gen", type=_gen, action="append", metavar="KIND,PARAM,SEED",
                    help="generated trace: zipf,s,seed | runs,mean_len,seed | uniform,seed")
    run.add_argument("--packets", type=int, default=10000, help="generated trace length")
    run.add_argument("--variants", type=_variants, default=list(Variant),
                     help="comma list of MRF_MEMORYLESS,MRF_FAST,STATIC_LIST or 'all'")
    run.add_argument("--reps", type=int, default=32)
    run.add_argument("--alpha", type=float, default=5, help="MRF_FAST swap discount")
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.add_argument("--out", help="output path (default stdout)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")

    ver = sub.add_parser("verify", help="randomized checks against the offline optimum")
    ver.add_argument("--max-n", type=int, default=5)
    ver.add_argument("--instances", type=int, default=200)
    ver.add_argument("--max-m", type=int, default=12)
    ver.add_argument("--alphas", type=_alphas, default=[1, 2, 5])
    ver.add_argument("--edge-prob", type=float, default=0.3)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--dump", help="write counterexamples as JSON here")
    ver.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    st = sub.add_parser("stats", help="dependency DAG statistics of a ruleset")
    _add_ruleset_args(st)
    st.add_argument("--format", choices=("text", "json"), default="text")
    st.add_argument("--edges", help="also write the full edge list here")

    gen = sub.add_parser("gen", help="write a synthetic ruleset or a generated trace")
    gen.add_argument("what", choices=("ruleset", "trace"))
    _add_ruleset_args(gen)
    gen.add_argument("--gen", type=_gen, metavar="KIND,PARAM,SEED")
    gen.add_argument("--packets", type=int, default=10000)
    gen.add_argument("--out", help="output path (default stdout)")
    return parser


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_run(a) -> int:
    rulesets = ([RulesetSource(path=p) for p in a.ruleset] if a.ruleset else a.synthetic)
    if a.trace:
        traces = [TraceSource(path=a.trace)]
    else:
        traces = [TraceSource(kind=k, param=p, seed=s, packets=a.packets) for k, p, s in a.gen]
    spec = ExperimentSpec(rulesets, traces, a.variants, a.reps, a.alpha, a.format, a.out, a.jobs)
    _emit(format_rows(run_experiment(spec), spec.fmt), spec.out)
    return EXIT_OK


def cmd_verify(a) -> int:
    outcomes = verify(a.max_n, a.instances, a.max_m, a.alphas, a.seed, a.edge_prob,
                      a.inject_fault)
    failures = []
    for o in outcomes:
        print(f"{'PASS' if o.passed else 'FAIL'} {o.name} ({o.cases} cases)")
        if not o.passed:
            failures.append({"check": o.name, **o.failure})
    if failures:
        dump = json.dumps(failures, indent=2, default=str)
        if a.dump:
            Path(a.dump).write_text(dump + "\n", encoding="utf-8")
            print(f"counterexamples written to {a.dump}", file=sys.stderr)
        else:
            print(dump, file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _load_ruleset(a) -> Ruleset:
    if a.ruleset:
        return RulesetSource(path=a.ruleset).load()
    return a.synthetic.load()


def cmd_stats(a) -> int:
    rs = _load_ruleset(a)
    full = build_dag(rs)
    reduced = transitive_reduction(full)
    stats = dag_stats(full)
    report = {
        "nodes": len(rs),
        "full_edges": len(full.edges),
        "reduced_edges": len(reduced.edges),
        "max_depth": stats.max_depth,
        "avg_out_degree": stats.avg_out_degree,
        "avg_out_degree_reduced": dag_stats(reduced).avg_out_degree,
        "avg_ancestors": stats.avg_ancestors,
    }
    if a.format == "json":
        print(json.dumps(report))
    else:
        for k, v in report.items():
            print(f"{k}: {round(v, 6) if isinstance(v, float) else v}")
    if a.edges:
        Path(a.edges).write_text(format_edges(full), encoding="utf-8")
    return EXIT_OK


def cmd_gen(a) -> int:
    rs = _load_ruleset(a)
    if a.what == "ruleset":
        _emit(format_classbench_ruleset(rs), a.out)
        return EXIT_OK
    if not a.gen:
        raise UsageError("gen trace needs --gen KIND,PARAM,SEED")
    kind, param, seed = a.gen
    trace = generate_trace(rs, TraceSource(kind=kind, param=param, seed=seed).params(0), a.packets)
    trace.meta.pop("ranking", None)
    _emit(format_trace(trace), a.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "stats": cmd_stats, "gen": cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"mrflist: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"mrflist: parse error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"mrflist: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"mrflist: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
