"""Self-adjusting list under precedence constraints.

Positions are 1-based. Costs follow the paid exchange model: accessing the
node at position ``i`` costs ``alpha * i`` and every adjacent transposition
costs 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Iterator, Optional, Protocol, Union

from .dag import DepDag, UnknownNodeError, validate_feasible
from .rules import Rule, Ruleset, depends_on

Number = Union[int, float, Fraction]


class ConstraintViolation(ValueError):
    pass


class InfeasibleInsertError(ConstraintViolation):
    """No gap-free slot exists; use insert_with_repair instead."""


class ListConfig:
    """Node order (head first) with a node -> position index kept in sync."""

    def __init__(self, order: Iterable[Hashable] = ()):
        self.order: list = list(order)
        self._pos: dict = {}
        self._reindex(0)
        if len(self._pos) != len(self.order):
            raise ValueError("duplicate nodes in configuration")

    def _reindex(self, start: int, stop: Optional[int] = None):
        order = self.order
        for i in range(start, len(order) if stop is None else stop):
            self._pos[order[i]] = i + 1

    def position(self, node) -> int:
        try:
            return self._pos[node]
        except KeyError:
            raise UnknownNodeError(node) from None

    def __getitem__(self, position: int):
        """Node at a 1-based position."""
        if not 1 <= position <= len(self.order):
            raise IndexError(position)
        return self.order[position - 1]

    def __contains__(self, node) -> bool:
        return node in self._pos

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator:
        return iter(self.order)

    def __eq__(self, other):
        if isinstance(other, ListConfig):
            return self.order == other.order
        return self.order == list(other)

    def __repr__(self):
        return f"ListConfig({self.order!r})"

    def copy(self) -> ListConfig:
        return ListConfig(self.order)

    def move_forward(self, node, target: int) -> int:
        """Move ``node`` to ``target`` by adjacent swaps; returns the swap count."""
        p = self.position(node)
        if target > p or target < 1:
            raise ValueError(f"cannot move {node!r} from {p} forward to {target}")
        if target == p:
            return 0
        del self.order[p - 1]
        self.order.insert(target - 1, node)
        self._reindex(target - 1, p)
        return p - target

    def insert(self, node, position: int):
        if node in self._pos:
            raise ValueError(f"node {node!r} already present")
        self.order.insert(position - 1, node)
        self._reindex(position - 1)

    def remove(self, node) -> int:
        p = self.position(node)
        del self.order[p - 1]
        del self._pos[node]
        self._reindex(p - 1)
        return p


@dataclass(frozen=True)
class CostModel:
    alpha: Number = 1
    transposition_cost: int = 1

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.transposition_cost != 1:
            raise ValueError("transpositions always cost 1")


@dataclass
class RequestCost:
    kind: str
    node: Hashable
    access: Number = 0
    transpositions: int = 0
    insertion: int = 0

    @property
    def total(self) -> Number:
        return self.access + self.transpositions + self.insertion


@dataclass
class CostLedger:
    access_cost: Number = 0
    transpositions: int = 0
    insertion_cost: int = 0
    requests: list = field(default_factory=list)
    keep_requests: bool = True

    @property
    def total(self) -> Number:
        return self.access_cost + self.transpositions + self.insertion_cost

    def charge(self, entry: RequestCost):
        self.access_cost += entry.access
        self.transpositions += entry.transpositions
        self.insertion_cost += entry.insertion
        if self.keep_requests:
            self.requests.append(entry)

    def clear(self):
        self.access_cost = 0
        self.transpositions = 0
        self.insertion_cost = 0
        self.requests.clear()


class DependencyProvider(Protocol):
    def is_dependency(self, u, v) -> bool:
        """Whether ``v`` must precede ``u``."""

    def dependencies_of(self, u) -> Optional[Iterable]:
        """Stored dependency list of ``u``, or None to make callers scan the list."""


class RuleDependencies:
    """Memoryless provider: dependencies computed on the fly from rule overlap."""

    def __init__(self, rules: Union[Ruleset, Iterable[Rule]]):
        self.rules = {r.id: r for r in rules}
        self.checks = 0

    def is_dependency(self, u, v) -> bool:
        self.checks += 1
        return depends_on(self.rules[u], self.rules[v])

    def dependencies_of(self, u):
        return None

    def add_rule(self, rule: Rule):
        self.rules[rule.id] = rule


class DagDependencies:
    """Provider backed by the neighbor lists of a stored DAG."""

    def __init__(self, dag: DepDag):
        self.dag = dag
        self.checks = 0

    def is_dependency(self, u, v) -> bool:
        self.checks += 1
        return v in self.dag.deps[u]

    def dependencies_of(self, u):
        deps = self.dag.deps[u]
        self.checks += len(deps)
        return deps


@dataclass
class AccessRecord:
    node: Hashable
    position: int  # before the access
    transpositions: int
    moved: tuple  # nodes moved forward, head first; the accessed node is last


def transpose_adjacent(cfg: ListConfig, i: int, dag: DepDag) -> ListConfig:
    """Swap the nodes at positions ``i`` and ``i + 1`` if feasible."""
    if not 1 <= i < len(cfg):
        raise IndexError(i)
    a, b = cfg.order[i - 1], cfg.order[i]
    if a in dag.deps[b]:
        raise ConstraintViolation(f"{a!r} must stay in front of {b!r}")
    cfg.order[i - 1], cfg.order[i] = b, a
    cfg._reindex(i - 1, i + 1)
    return cfg


def direct_dependency(cfg: ListConfig, provider: DependencyProvider, y):
    """The dependency of ``y`` located furthest from the head, or None."""
    p = cfg.position(y)
    stored = provider.dependencies_of(y)
    if stored is not None:
        best, best_pos = None, 0
        for v in stored:
            if v in cfg:
                q = cfg.position(v)
                if best_pos < q < p:
                    best, best_pos = v, q
        return best
    order = cfg.order
    for i in range(p - 2, -1, -1):
        if provider.is_dependency(y, order[i]):
            return order[i]
    return None


def mrf_access(cfg: ListConfig, provider: DependencyProvider, y,
               model: CostModel = CostModel(), ledger: Optional[CostLedger] = None,
               *, recurse: bool = True) -> AccessRecord:
    """Serve an access to ``y`` with Move-Recursively-Forward, mutating ``cfg``.

    ``y`` moves to just behind its direct dependency, which then runs the same
    procedure; a node without dependencies in the list moves to the head.
    ``recurse=False`` stops after the first move and exists only for fault
    injection in the verification harness.
    """
    p = cfg.position(y)
    moved = []
    swaps = 0
    cur = y
    while True:
        z = direct_dependency(cfg, provider, cur)
        target = cfg.position(z) + 1 if z is not None else 1
        swaps += cfg.move_forward(cur, target)
        moved.append(cur)
        if z is None or not recurse:
            break
        cur = z
    if ledger is not None:
        ledger.charge(RequestCost("access", y, model.alpha * p, swaps))
    return AccessRecord(y, p, swaps, tuple(reversed(moved)))


def static_access(cfg: ListConfig, y, model: CostModel = CostModel(),
                  ledger: Optional[CostLedger] = None) -> ListConfig:
    p = cfg.position(y)
    if ledger is not None:
        ledger.charge(RequestCost("access", y, model.alpha * p))
    return cfg


def _check_insertable(cfg: ListConfig, dag: DepDag, x):
    if x not in dag:
        raise UnknownNodeError(x)
    if x in cfg:
        raise ValueError(f"node {x!r} already in the list")
    if set(dag.nodes) != set(cfg.order) | {x}:
        raise ValueError("DAG must cover exactly the list nodes plus the new node")


def insert_transitive(cfg: ListConfig, dag: DepDag, x,
                      ledger: Optional[CostLedger] = None) -> ListConfig:
    """Insert ``x`` right behind its furthest dependency without rearranging.

    ``dag`` must already contain ``x`` and the edges it reveals.
    """
    _check_insertable(cfg, dag, x)
    slot = max((cfg.position(v) for v in dag.deps[x]), default=0) + 1
    first_dependent = min((cfg.position(u) for u in dag.dependents[x]), default=len(cfg) + 1)
    if first_dependent < slot:
        raise InfeasibleInsertError(
            f"no feasible slot for {x!r}: dependent at {first_dependent} is in front "
            f"of a dependency at {slot - 1}; use insert_with_repair")
    cfg.insert(x, slot)
    if ledger is not None:
        ledger.charge(RequestCost("insert", x, insertion=len(cfg)))
    return cfg


def insert_with_repair(cfg: ListConfig, dag: DepDag, x,
                       ledger: Optional[CostLedger] = None) -> ListConfig:
    """Insert ``x`` after rearranging so its revealed constraints hold.

    The new order is every node that must precede ``x`` (current relative
    order), then ``x``, then the rest (current relative order). The charge is
    the Kendall tau distance of that rearrangement plus the insertion cost.
    """
    _check_insertable(cfg, dag, x)
    before = dag.ancestors(x)
    head = [u for u in cfg.order if u in before]
    tail = [u for u in cfg.order if u not in before]
    new_order = head + tail
    swaps = order_inversions(cfg.order, new_order)
    cfg.order[:] = new_order
    cfg._reindex(0)
    cfg.insert(x, len(head) + 1)
    if not validate_feasible(dag, cfg):
        raise ConstraintViolation("repaired order is infeasible")
    if ledger is not None:
        ledger.charge(RequestCost("insert", x, transpositions=swaps, insertion=len(cfg)))
    return cfg


def order_inversions(old: list, new: list) -> int:
    """Inversions between two orders of the same nodes (merge count)."""
    rank = {u: i for i, u in enumerate(new)}
    seq = [rank[u] for u in old]
    return _count_inversions(seq)


def _count_inversions(seq: list) -> int:
    if len(seq) < 2:
        return 0
    mid = len(seq) // 2
    left, right = seq[:mid], seq[mid:]
    inv = _count_inversions(left) + _count_inversions(right)
    left.sort()
    right.sort()
    i = 0
    for r in right:
        while i < len(left) and left[i] < r:
            i += 1
        inv += len(left) - i
    return inv


def delete(cfg: ListConfig, dag: Optional[DepDag], y, model: CostModel = CostModel(),
           ledger: Optional[CostLedger] = None) -> Optional[DepDag]:
    """Access then remove ``y``; returns the DAG without ``y``'s edges."""
    p = cfg.position(y)
    cfg.remove(y)
    if ledger is not None:
        ledger.charge(RequestCost("delete", y, model.alpha * p))
    return dag.without(y) if dag is not None else None


class AdjustingList:
    """A list, its governing DAG, a cost model and a ledger bundled together.

    ``policy`` is ``"mrf"`` or ``"static"``. When no provider is given, the
    dependencies are looked up in the DAG.
    """

    def __init__(self, order: Iterable, dag: DepDag, model: CostModel = CostModel(),
                 provider: Optional[DependencyProvider] = None, policy: str = "mrf",
                 keep_requests: bool = True):
        if policy not in ("mrf", "static"):
            raise ValueError(f"unknown policy {policy!r}")
        self.cfg = ListConfig(order)
        if not validate_feasible(dag, self.cfg):
            raise ConstraintViolation("initial configuration violates the DAG")
        self.dag = dag
        self.model = model
        self._own_provider = provider is None
        self.provider = provider if provider is not None else DagDependencies(dag)
        self.policy = policy
        self.ledger = CostLedger(keep_requests=keep_requests)

    def _set_dag(self, dag: DepDag):
        self.dag = dag
        if self._own_provider:
            self.provider = DagDependencies(dag)

    def access(self, y) -> AccessRecord:
        if self.policy == "static":
            p = self.cfg.position(y)
            static_access(self.cfg, y, self.model, self.ledger)
            return AccessRecord(y, p, 0, ())
        return mrf_access(self.cfg, self.provider, y, self.model, self.ledger)

    def insert(self, x, dependencies: Iterable = (), dependents: Iterable = (),
               repair: bool = False):
        dag = self.dag.with_node(x, dependencies, dependents)
        if repair:
            insert_with_repair(self.cfg, dag, x, self.ledger)
        else:
            insert_transitive(self.cfg, dag, x, self.ledger)
        self._set_dag(dag)

    def delete(self, y):
        self._set_dag(delete(self.cfg, self.dag, y, self.model, self.ledger))

    @property
    def order(self) -> list:
        return list(self.cfg.order)
