"""Child-selection rules.

The primary rule scores a child by its subtree-max value plus a visit-ratio
exploration term c*sqrt(sum_siblings_N / (N+1)); the +1 keeps the ratio
defined at zero visits, so freshly judged children compete on their scores
instead of being force-picked.  The classic log-ratio rule is kept for
ablations and is undefined at zero visits (callers pick unvisited children
first, as usual).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .backup import MODES, q_for_selection
from .tree import ROOT, SearchTree, TreeError

ALPHA_UCT = "alpha_uct"
STANDARD_UCT = "standard_uct"
KINDS = (ALPHA_UCT, STANDARD_UCT)


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str = ALPHA_UCT
    c: float = 1.0
    value_mode: str = "max"  # which backed-up statistic feeds exploitation

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown selection kind {self.kind!r}")
        if not self.c >= 0.0:
            raise ValueError("exploration constant must be >= 0")
        if self.value_mode not in MODES:
            raise ValueError(f"unknown value mode {self.value_mode!r}")


def alpha_uct_score(q: float, n_action: int, n_siblings_total: int,
                    c: float) -> float:
    """q + c*sqrt(n_siblings_total / (n_action + 1))."""
    if n_action < 0 or n_siblings_total < 0:
        raise ValueError("visit counts must be non-negative")
    return q + c * math.sqrt(n_siblings_total / (n_action + 1))


def uct_score(q: float, n_action: int, n_parent: int, c: float) -> float:
    """q + c*sqrt(ln(n_parent) / n_action); zero visits are an error here."""
    if n_action <= 0:
        raise ValueError("log-ratio score undefined at zero visits")
    if n_parent < 1:
        raise ValueError("parent visit count must be >= 1")
    return q + c * math.sqrt(math.log(n_parent) / n_action)


def select_child(tree: SearchTree, node_id: int,
                 policy: SelectionPolicy) -> int:
    """Highest-scoring child of ``node_id``; ties go to the earliest-admitted."""
    kids = tree.node(node_id).children
    if not kids:
        raise TreeError(f"node {node_id} has no children")
    if policy.kind == STANDARD_UCT:
        for cid in kids:
            if tree.nodes[cid].visit_count == 0:
                return cid
        n_parent = max(1, tree.node(node_id).visit_count)
        best, best_score = kids[0], -math.inf
        for cid in kids:
            s = uct_score(q_for_selection(tree, cid, policy.value_mode),
                          tree.nodes[cid].visit_count, n_parent, policy.c)
            if s > best_score:
                best, best_score = cid, s
        return best
    total = sum(tree.nodes[cid].visit_count for cid in kids)
    best, best_score = kids[0], -math.inf
    for cid in kids:
        s = alpha_uct_score(q_for_selection(tree, cid, policy.value_mode),
                            tree.nodes[cid].visit_count, total, policy.c)
        if s > best_score:
            best, best_score = cid, s
    return best


def select_leaf(tree: SearchTree, policy: SelectionPolicy,
                start: int = ROOT) -> int:
    """Descend by repeated child selection until a childless node is reached."""
    node = start
    while tree.node(node).children:
        node = select_child(tree, node, policy)
    return node
