"""Verification machinery for MRF.

Inversion counting, the potential function, a brute-force offline optimum
over feasible permutations, per-access amortized audits, and the adversary
that always requests the tail of the online list.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterator, Optional, Sequence

from .adjusting_list import (
    ConstraintViolation,
    CostLedger,
    CostModel,
    DagDependencies,
    ListConfig,
    mrf_access,
    order_inversions,
    static_access,
)
from .dag import DepDag, NodeMismatchError, validate_feasible

MAX_OPT_NODES = 8


class InstanceTooLarge(ValueError):
    pass


def _orders(a, b) -> tuple[list, list]:
    a = list(a.order if hasattr(a, "order") else a)
    b = list(b.order if hasattr(b, "order") else b)
    if len(a) != len(b) or set(a) != set(b) or len(set(a)) != len(a):
        raise NodeMismatchError("configurations hold different node sets")
    return a, b


def count_inversions(a, b) -> int:
    """Pairs ordered one way in ``a`` and the other way in ``b``."""
    a, b = _orders(a, b)
    return order_inversions(a, b)


def inversion_pairs(a, b) -> set:
    """The inversions themselves, as (u, v) with u before v in ``a``."""
    a, b = _orders(a, b)
    pos_b = {u: i for i, u in enumerate(b)}
    return {(u, v) for i, u in enumerate(a) for v in a[i + 1:] if pos_b[u] > pos_b[v]}


def potential(a, b, alpha=1):
    return (1 + alpha) * count_inversions(a, b)


def kendall_tau(a, b) -> int:
    """Minimum number of adjacent transpositions turning ``a`` into ``b``."""
    return count_inversions(a, b)


def transposition_path(a, b) -> list[int]:
    """Adjacent swaps (1-based left positions) that bubble ``a`` into ``b``.

    Only pairs ordered differently in ``a`` and ``b`` are ever swapped, so when
    both endpoints are feasible every intermediate order is feasible too.
    """
    a, b = _orders(a, b)
    rank = {u: i for i, u in enumerate(b)}
    seq = [rank[u] for u in a]
    path = []
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            path.append(j)
            j -= 1
    return path


def feasible_permutations(dag: DepDag) -> list[tuple]:
    """All linear extensions of ``dag`` in lexicographic order of ``dag.nodes``."""
    nodes = dag.nodes
    out = []
    placed: set = set()
    prefix: list = []

    def extend():
        if len(prefix) == len(nodes):
            out.append(tuple(prefix))
            return
        for u in nodes:
            if u not in placed and dag.deps[u] <= placed:
                placed.add(u)
                prefix.append(u)
                extend()
                prefix.pop()
                placed.discard(u)

    extend()
    return out


@dataclass
class OptResult:
    total_cost: object
    witness: list  # configuration in force at each access, after OPT's rearrangement
    initial: tuple = ()

    def witness_cost(self, requests: Sequence, alpha=1):
        cost, prev = 0, self.initial
        for cfg, y in zip(self.witness, requests):
            cost += kendall_tau(prev, cfg) + alpha * (cfg.index(y) + 1)
            prev = cfg
        return cost


class _PermGraph:
    """Feasible permutations joined by feasible adjacent transpositions."""

    def __init__(self, dag: DepDag):
        self.perms = feasible_permutations(dag)
        self.index = {p: i for i, p in enumerate(self.perms)}
        self.pos = [{u: i + 1 for i, u in enumerate(p)} for p in self.perms]
        self.adj = []
        for p in self.perms:
            nbrs = []
            for i in range(len(p) - 1):
                if p[i] not in dag.deps[p[i + 1]]:
                    q = p[:i] + (p[i + 1], p[i]) + p[i + 2:]
                    nbrs.append(self.index[q])
            self.adj.append(nbrs)

    def relax(self, cost: list) -> tuple[list, list]:
        """dist[q] = min_p cost[p] + d(p, q), with the arg-min p as origin."""
        inf = float("inf")
        dist = list(cost)
        origin = list(range(len(cost)))
        heap = [(c, i) for i, c in enumerate(cost) if c != inf]
        heapq.heapify(heap)
        while heap:
            d, i = heapq.heappop(heap)
            if d > dist[i]:
                continue
            for j in self.adj[i]:
                if d + 1 < dist[j]:
                    dist[j] = d + 1
                    origin[j] = origin[i]
                    heapq.heappush(heap, (d + 1, j))
        return dist, origin


def opt_offline(dag: DepDag, initial, requests: Sequence, alpha=1) -> OptResult:
    """Exact offline optimum by dynamic programming over (time, permutation).

    OPT may rearrange before each access; rearranging after an access is the
    same as rearranging before the next one, and the transposition distance
    obeys the triangle inequality, so one transition per step loses nothing.
    """
    initial = tuple(initial.order if hasattr(initial, "order") else initial)
    if len(dag.nodes) > MAX_OPT_NODES:
        raise InstanceTooLarge(f"opt_offline enumerates permutations; n <= {MAX_OPT_NODES}")
    if not validate_feasible(dag, initial):
        raise ConstraintViolation("initial configuration is infeasible")
    for y in requests:
        dag.check(y)
    if not requests:
        return OptResult(0, [], initial)

    g = _PermGraph(dag)
    inf = float("inf")
    cost = [inf] * len(g.perms)
    cost[g.index[initial]] = 0
    parents = []
    for y in requests:
        dist, origin = g.relax(cost)
        cost = [d + alpha * g.pos[i][y] for i, d in enumerate(dist)]
        parents.append(origin)
    best = min(range(len(cost)), key=cost.__getitem__)
    witness = []
    i = best
    for origin in reversed(parents):
        witness.append(g.perms[i])
        i = origin[i]
    witness.reverse()
    return OptResult(cost[best], witness, initial)


@dataclass
class AccessEventAudit:
    t: int
    node: Hashable
    d_sequence: tuple
    k: int
    l: int
    created: int
    destroyed: int
    mrf_cost: object
    opt_cost: object
    phi_before: object  # potential after the previous event
    phi_after: object
    ratio: object  # competitive factor the amortized check uses
    position: int = 0

    @property
    def delta(self) -> int:
        return len(self.d_sequence)

    @property
    def created_ok(self) -> bool:
        return self.created <= self.k

    @property
    def destroyed_ok(self) -> bool:
        return self.destroyed >= self.l

    @property
    def inversions_ok(self) -> bool:
        return self.created - self.destroyed <= self.k - self.l

    @property
    def amortized_ok(self) -> bool:
        return self.mrf_cost + (self.phi_after - self.phi_before) <= self.ratio * self.opt_cost

    @property
    def ok(self) -> bool:
        return self.created_ok and self.destroyed_ok and self.inversions_ok and self.amortized_ok


def competitive_ratio_bound(alpha) -> object:
    return max(4, 1 + alpha)


def run_with_audit(dag: DepDag, initial, requests: Sequence, witness: Sequence,
                   alpha=1, provider=None, recurse: bool = True) -> list[AccessEventAudit]:
    """Replay MRF on ``requests`` and audit every access against OPT's witness.

    OPT's configuration is held fixed at ``witness[t]`` during access ``t``.
    """
    if len(witness) != len(requests):
        raise ValueError("witness and request sequence differ in length")
    initial = tuple(initial.order if hasattr(initial, "order") else initial)
    cfg = ListConfig(initial)
    provider = provider or DagDependencies(dag)
    model = CostModel(alpha)
    ratio = competitive_ratio_bound(alpha)
    audits = []
    opt_prev = initial
    phi = 0
    for t, (y, opt) in enumerate(zip(requests, witness)):
        opt = tuple(opt)
        _orders(cfg, opt)
        opt_pos = {u: i for i, u in enumerate(opt)}
        p = cfg.position(y)
        ahead = cfg.order[:p - 1]
        k = sum(opt_pos[u] < opt_pos[y] for u in ahead)
        l = sum(opt_pos[u] > opt_pos[y] for u in ahead)
        inv_before = inversion_pairs(cfg, opt)
        rec = mrf_access(cfg, provider, y, model, recurse=recurse)
        inv_after = inversion_pairs(cfg, opt)
        phi_after = (1 + alpha) * len(inv_after)
        audits.append(AccessEventAudit(
            t=t, node=y, d_sequence=rec.moved, k=k, l=l,
            created=len(inv_after - inv_before),
            destroyed=len(inv_before - inv_after),
            mrf_cost=alpha * p + rec.transpositions,
            opt_cost=kendall_tau(opt_prev, opt) + alpha * (opt_pos[y] + 1),
            phi_before=phi, phi_after=phi_after, ratio=ratio, position=p,
        ))
        phi, opt_prev = phi_after, opt
    return audits


def mrf_cost(dag: DepDag, initial, requests: Sequence, alpha=1, provider=None,
             recurse: bool = True) -> object:
    cfg = ListConfig(initial)
    provider = provider or DagDependencies(dag)
    ledger = CostLedger(keep_requests=False)
    model = CostModel(alpha)
    for y in requests:
        mrf_access(cfg, provider, y, model, ledger, recurse=recurse)
    return ledger.total


def move_to_front(order: Sequence, requests: Sequence) -> list[list]:
    """Textbook Move-To-Front; the list after each request."""
    lst = list(order)
    trace = []
    for y in requests:
        lst.remove(y)
        lst.insert(0, y)
        trace.append(list(lst))
    return trace


@dataclass
class Instance:
    dag: DepDag
    initial: tuple
    requests: list
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "nodes": list(self.dag.nodes),
            "edges": sorted(map(list, self.dag.edges)),
            "initial": list(self.initial),
            "requests": list(self.requests),
        }


def random_dag(rng: random.Random, n: int, edge_prob: float = 0.3) -> DepDag:
    nodes = list(range(n))
    topo = nodes[:]
    rng.shuffle(topo)
    edges = [(topo[j], topo[i]) for j in range(n) for i in range(j) if rng.random() < edge_prob]
    return DepDag(nodes, edges)


def random_instance(seed: int, n: int, m: int, edge_prob: float = 0.3) -> Instance:
    """Seeded random DAG, a uniformly chosen feasible start, uniform requests."""
    rng = random.Random(seed)
    dag = random_dag(rng, n, edge_prob)
    initial = rng.choice(feasible_permutations(dag))
    requests = [rng.randrange(n) for _ in range(m)]
    return Instance(dag, initial, requests, seed)


@dataclass
class InstanceCheck:
    instance: Instance
    alpha: object
    mrf_cost: object
    opt_cost: object
    bound: object
    audits: list = field(default_factory=list)

    @property
    def competitive_ok(self) -> bool:
        return self.mrf_cost <= self.bound * self.opt_cost

    @property
    def audits_ok(self) -> bool:
        return all(a.ok for a in self.audits)

    @property
    def ok(self) -> bool:
        return self.competitive_ok and self.audits_ok


def check_instance(inst: Instance, alpha=1, recurse: bool = True) -> InstanceCheck:
    """MRF vs the offline optimum on one instance, with per-access audits."""
    opt = opt_offline(inst.dag, inst.initial, inst.requests, alpha)
    audits = run_with_audit(inst.dag, inst.initial, inst.requests, opt.witness,
                            alpha, recurse=recurse)
    cost = sum(a.mrf_cost for a in audits)
    return InstanceCheck(inst, alpha, cost, opt.total_cost,
                         competitive_ratio_bound(alpha), audits)


def shrink_requests(inst: Instance, fails: Callable[[Instance], bool]) -> Instance:
    """Greedily drop requests while ``fails`` still holds."""
    cur = inst
    changed = True
    while changed:
        changed = False
        for i in range(len(cur.requests)):
            cand = Instance(cur.dag, cur.initial, cur.requests[:i] + cur.requests[i + 1:], cur.seed)
            if cand.requests and fails(cand):
                cur, changed = cand, True
                break
    return cur


def adversarial_trace(cfg: ListConfig, m: int, alpha=1) -> Iterator[tuple]:
    """Yield ``(request, comparator_cost)`` pairs aimed at the current tail of ``cfg``.

    The caller serves each request before pulling the next one, so the
    generator always sees the online algorithm's latest list. The comparator
    moves the requested node to the front beforehand and pays at most n + alpha.
    """
    for _ in range(m):
        yield cfg.order[-1], len(cfg) + alpha


@dataclass
class AdversaryResult:
    n: int
    m: int
    alpha: object
    measured: object
    comparator: object

    @property
    def ratio(self) -> float:
        return self.measured / self.comparator

    @property
    def lower_bound(self) -> float:
        return self.n * self.alpha / (self.n + self.alpha)


def run_adversary(n: int, m: int, alpha=1, policy: str = "mrf",
                  dag: Optional[DepDag] = None) -> AdversaryResult:
    dag = dag or DepDag(range(n))
    cfg = ListConfig(dag.topo_order if dag.edges else dag.nodes)
    provider = DagDependencies(dag)
    model = CostModel(alpha)
    ledger = CostLedger(keep_requests=False)
    comparator = 0
    for y, c in adversarial_trace(cfg, m, alpha):
        if policy == "mrf":
            mrf_access(cfg, provider, y, model, ledger)
        elif policy == "static":
            static_access(cfg, y, model, ledger)
        else:
            raise ValueError(f"unknown policy {policy!r}")
        comparator += c
    return AdversaryResult(n, m, alpha, ledger.total, comparator)
