"""Self-adjusting list packet classification with precedence constraints."""

from .adjusting_list import (
    AdjustingList,
    ConstraintViolation,
    CostLedger,
    CostModel,
    DagDependencies,
    InfeasibleInsertError,
    ListConfig,
    RuleDependencies,
    delete,
    direct_dependency,
    insert_transitive,
    insert_with_repair,
    mrf_access,
    static_access,
    transpose_adjacent,
)
from .classifier import Classifier, TraversalStats, Variant
from .dag import (
    DagStats,
    DepDag,
    build_dag,
    dag_stats,
    reachable,
    transitive_reduction,
    validate_feasible,
)
from .rules import (
    FieldRange,
    Packet,
    ParseError,
    Rule,
    Ruleset,
    depends_on,
    highest_priority_match,
    make_rule,
    matches,
    overlaps,
    parse_classbench_ruleset,
)

__version__ = "0.1.0"

__all__ = [
    "AdjustingList",
    "ConstraintViolation",
    "CostLedger",
    "CostModel",
    "DagDependencies",
    "InfeasibleInsertError",
    "ListConfig",
    "RuleDependencies",
    "delete",
    "direct_dependency",
    "insert_transitive",
    "insert_with_repair",
    "mrf_access",
    "static_access",
    "transpose_adjacent",
    "Classifier",
    "TraversalStats",
    "Variant",
    "DagStats",
    "DepDag",
    "build_dag",
    "dag_stats",
    "reachable",
    "transitive_reduction",
    "validate_feasible",
    "FieldRange",
    "Packet",
    "ParseError",
    "Rule",
    "Ruleset",
    "depends_on",
    "highest_priority_match",
    "make_rule",
    "matches",
    "overlaps",
    "parse_classbench_ruleset",
]
