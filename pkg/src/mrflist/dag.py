"""Precedence DAG over list nodes.

An edge ``(u, v)`` means ``v`` is a dependency of ``u``: ``v`` must be in
front of ``u`` in every configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .rules import Ruleset

__all__ = [
    "CycleError", "DepDag", "DagStats", "UnknownNodeError", "NodeMismatchError",
    "build_dag", "reachable", "transitive_reduction", "transitive_closure",
    "validate_feasible", "dag_stats", "format_edges", "dag_from_mapping",
]


class UnknownNodeError(KeyError):
    pass


class NodeMismatchError(ValueError):
    pass


class DepDag:
    def __init__(self, nodes: Iterable[Hashable], edges: Iterable[tuple] = ()):
        self.nodes: tuple = tuple(nodes)
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValueError("duplicate nodes")
        self.deps: dict = {u: set() for u in self.nodes}
        self.dependents: dict = {u: set() for u in self.nodes}
        for u, v in edges:
            if u not in node_set or v not in node_set:
                raise UnknownNodeError((u, v))
            if u == v:
                raise CycleError("self loop", [u, u])
            self.deps[u].add(v)
            self.dependents[v].add(u)
        self.edges = frozenset((u, v) for u in self.nodes for v in self.deps[u])
        # raises CycleError
        self.topo_order: tuple = tuple(TopologicalSorter(self.deps).static_order())
        self._closure = None

    def __contains__(self, u) -> bool:
        return u in self.deps

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other):
        return (isinstance(other, DepDag) and set(self.nodes) == set(other.nodes)
                and self.edges == other.edges)

    def __hash__(self):
        return hash((frozenset(self.nodes), self.edges))

    def __repr__(self):
        return f"DepDag({len(self.nodes)} nodes, {len(self.edges)} edges)"

    def check(self, u):
        if u not in self.deps:
            raise UnknownNodeError(u)

    def with_node(self, x, dependencies: Iterable = (), dependents: Iterable = ()) -> DepDag:
        """New DAG with ``x`` added; raises CycleError if the edges close a cycle."""
        if x in self.deps:
            raise ValueError(f"node {x!r} already present")
        new_edges = [(x, v) for v in dependencies] + [(u, x) for u in dependents]
        return DepDag(self.nodes + (x,), list(self.edges) + new_edges)

    def without(self, x) -> DepDag:
        self.check(x)
        return DepDag([u for u in self.nodes if u != x],
                      [(u, v) for u, v in self.edges if x not in (u, v)])

    def closure_masks(self) -> dict:
        """Map node -> bitmask (over ``self.nodes`` indices) of all its ancestors."""
        if self._closure is None:
            index = {u: i for i, u in enumerate(self.nodes)}
            masks = {}
            for u in self.topo_order:  # dependencies come first
                m = 0
                for v in self.deps[u]:
                    m |= masks[v] | (1 << index[v])
                masks[u] = m
            self._closure = masks
        return self._closure

    def ancestors(self, u) -> set:
        """Every node that must precede ``u`` (transitively)."""
        self.check(u)
        m = self.closure_masks()[u]
        return {v for i, v in enumerate(self.nodes) if m >> i & 1}

    def descendants(self, v) -> set:
        """Every node that must follow ``v`` (transitively)."""
        self.check(v)
        i = self.nodes.index(v)
        masks = self.closure_masks()
        return {u for u in self.nodes if masks[u] >> i & 1}


@dataclass(frozen=True)
class DagStats:
    max_depth: int
    avg_out_degree: float
    avg_ancestors: float


def build_dag(rs: Ruleset) -> DepDag:
    """Edge (a, b) for every pair where b has higher priority and overlaps a."""
    n = len(rs)
    bounds = np.array([r.bounds for r in rs], dtype=np.int64).reshape(n, 5, 2)
    lo, hi = bounds[:, :, 0], bounds[:, :, 1]
    ids = rs.ids
    edges = []
    for i in range(1, n):
        hit = np.all((lo[:i] <= hi[i]) & (lo[i] <= hi[:i]), axis=1)
        edges.extend((ids[i], ids[j]) for j in np.flatnonzero(hit))
    return DepDag(ids, edges)


def reachable(dag: DepDag, u, v) -> bool:
    """True iff a directed path u -> ... -> v exists, i.e. v transitively precedes u."""
    dag.check(u)
    dag.check(v)
    return v != u and v in dag.ancestors(u)


def transitive_closure(dag: DepDag) -> DepDag:
    return DepDag(dag.nodes, [(u, v) for u in dag.nodes for v in dag.ancestors(u)])


def transitive_reduction(dag: DepDag) -> DepDag:
    index = {u: i for i, u in enumerate(dag.nodes)}
    masks = dag.closure_masks()
    kept = []
    for u in dag.nodes:
        implied = 0
        for w in dag.deps[u]:
            implied |= masks[w]
        kept.extend((u, v) for v in dag.deps[u] if not implied >> index[v] & 1)
    return DepDag(dag.nodes, kept)


def _as_order(cfg) -> Sequence:
    return cfg.order if hasattr(cfg, "order") else list(cfg)


def validate_feasible(dag: DepDag, cfg) -> bool:
    """True iff every dependency sits in front of its dependent in ``cfg``."""
    order = _as_order(cfg)
    pos = {u: i for i, u in enumerate(order)}
    if len(pos) != len(order) or set(pos) != set(dag.nodes):
        raise NodeMismatchError("configuration and DAG have different node sets")
    return all(pos[v] < pos[u] for u, v in dag.edges)


def dag_stats(dag: DepDag) -> DagStats:
    n = len(dag.nodes)
    if n == 0:
        return DagStats(0, 0.0, 0.0)
    depth = {}
    for u in dag.topo_order:
        depth[u] = max((depth[v] + 1 for v in dag.deps[u]), default=0)
    masks = dag.closure_masks()
    return DagStats(
        max_depth=max(depth.values()),
        avg_out_degree=len(dag.edges) / n,
        avg_ancestors=sum(bin(m).count("1") for m in masks.values()) / n,
    )


def format_edges(dag: DepDag) -> str:
    """Edge list dump, one ``u v`` pair per line (u depends on v)."""
    return "".join(f"{u} {v}\n" for u in dag.nodes for v in sorted(dag.deps[u], key=str))


def dag_from_mapping(deps: Mapping) -> DepDag:
    """DAG from ``{node: iterable of its dependencies}``."""
    nodes = list(deps)
    for vs in deps.values():
        nodes.extend(v for v in vs if v not in deps)
    return DepDag(dict.fromkeys(nodes), [(u, v) for u, vs in deps.items() for v in vs])
