"""Packet classifier over a self-adjusting rule list."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

from .adjusting_list import (
    CostLedger,
    CostModel,
    DagDependencies,
    ListConfig,
    RuleDependencies,
    mrf_access,
)
from .dag import DepDag, build_dag, transitive_reduction
from .rules import Ruleset

DEFAULT_ACTION = "DEFAULT"

# byte accounting: 5 ranges x 2 bounds x 4 B, plus id, priority and action
RULE_PAYLOAD_BYTES = 48
POINTER_BYTES = 4


class Variant(enum.Enum):
    MRF_MEMORYLESS = "MRF_MEMORYLESS"
    MRF_FAST = "MRF_FAST"
    STATIC_LIST = "STATIC_LIST"

    @classmethod
    def parse(cls, name: str) -> Variant:
        aliases = {"MRF": cls.MRF_MEMORYLESS, "MEMORYLESS": cls.MRF_MEMORYLESS,
                   "FAST": cls.MRF_FAST, "STATIC": cls.STATIC_LIST}
        key = name.strip().upper().replace("-", "_")
        return aliases.get(key) or cls(key)


@dataclass
class TraversalStats:
    lookup_nodes: int = 0
    swap_nodes: int = 0
    counted_cost: float = 0.0
    # dependency lookups done while rearranging; excluded from counted_cost
    dependency_checks: int = 0

    def add(self, other: TraversalStats):
        self.lookup_nodes += other.lookup_nodes
        self.swap_nodes += other.swap_nodes
        self.counted_cost += other.counted_cost
        self.dependency_checks += other.dependency_checks


class Classifier:
    """First-match classifier whose list is rearranged by MRF after each hit.

    MRF_MEMORYLESS recomputes dependencies from rule overlap on every move;
    MRF_FAST looks them up in the stored, transitively reduced DAG and counts
    swaps at 1/alpha of a lookup; STATIC_LIST never moves anything.
    """

    def __init__(self, rs: Ruleset, variant: Variant = Variant.MRF_MEMORYLESS,
                 alpha: float = 5, dag: Optional[DepDag] = None):
        if not len(rs):
            raise ValueError("empty ruleset")
        self.rs = rs
        self.variant = variant
        self.alpha = alpha if variant is Variant.MRF_FAST else 1
        if variant is Variant.MRF_FAST:
            self.dag = transitive_reduction(dag if dag is not None else build_dag(rs))
            self.provider = DagDependencies(self.dag)
        else:
            self.dag = None
            self.provider = RuleDependencies(rs)
        self.model = CostModel(self.alpha)
        self.reset()

    def reset(self) -> Classifier:
        self.cfg = ListConfig(self.rs.ids)
        self.ledger = CostLedger(keep_requests=False)
        self.totals = TraversalStats()
        self.packets = 0
        self.provider.checks = 0
        return self

    def lookup(self, pkt: Sequence[int]) -> tuple[Optional[Hashable], int]:
        """First matching rule id in list order and the nodes examined."""
        get = self.rs.get
        p0, p1, p2, p3, p4 = pkt
        for i, rid in enumerate(self.cfg.order, 1):
            b = get(rid).bounds
            if (b[0] <= p0 <= b[1] and b[2] <= p1 <= b[3] and b[4] <= p2 <= b[5]
                    and b[6] <= p3 <= b[7] and b[8] <= p4 <= b[9]):
                return rid, i
        return None, len(self.cfg)

    def classify(self, pkt: Sequence[int]) -> tuple[str, Optional[Hashable], TraversalStats]:
        rid, examined = self.lookup(pkt)
        stats = TraversalStats(lookup_nodes=examined)
        if rid is not None and self.variant is not Variant.STATIC_LIST:
            before = self.provider.checks
            rec = mrf_access(self.cfg, self.provider, rid, self.model, self.ledger)
            stats.swap_nodes = rec.transpositions
            stats.dependency_checks = self.provider.checks - before
        stats.counted_cost = stats.lookup_nodes + stats.swap_nodes / self.alpha
        self.totals.add(stats)
        self.packets += 1
        action = self.rs.get(rid).action if rid is not None else DEFAULT_ACTION
        return action, rid, stats

    def memory_footprint(self) -> int:
        n = len(self.rs)
        size = n * (RULE_PAYLOAD_BYTES + POINTER_BYTES)
        if self.variant is Variant.MRF_FAST:
            size += POINTER_BYTES * (len(self.dag.edges) + n)
        return size

    @property
    def order(self) -> list:
        return list(self.cfg.order)


def memory_footprint(cls: Classifier) -> int:
    return cls.memory_footprint()
