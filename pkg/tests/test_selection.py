"""Score formulas against hand-computed values, tie-breaking, and the
zero-visit behavior that separates the two rules."""
import math

import pytest
from hypothesis import given, strategies as st

from alphauct.selection import (ALPHA_UCT, STANDARD_UCT, SelectionPolicy,
                                alpha_uct_score, select_child, select_leaf,
                                uct_score)
from alphauct.tree import ROOT, ActionChunk, SearchTree, TreeError


def chunk(key: str) -> ActionChunk:
    return ActionChunk((key,), key)


def test_alpha_uct_score_hand_values():
    # 0.8 + 1*sqrt(12 / (3+1)) = 0.8 + sqrt(3)
    assert alpha_uct_score(0.8, 3, 12, 1.0) == pytest.approx(0.8 + math.sqrt(3))
    # unvisited child still gets a finite score: 0 + 2*sqrt(9/1)
    assert alpha_uct_score(0.0, 0, 9, 2.0) == 6.0
    # no sibling visits anywhere -> pure exploitation
    assert alpha_uct_score(0.5, 0, 0, 1.0) == 0.5
    with pytest.raises(ValueError):
        alpha_uct_score(0.0, -1, 3, 1.0)


def test_uct_score_hand_values():
    assert uct_score(0.5, 1, 1, 1.0) == 0.5  # ln(1) = 0
    assert uct_score(0.2, 4, 100, 1.0) == pytest.approx(
        0.2 + math.sqrt(math.log(100) / 4))
    with pytest.raises(ValueError):
        uct_score(0.5, 0, 10, 1.0)
    with pytest.raises(ValueError):
        uct_score(0.5, 1, 0, 1.0)


@given(st.floats(-1, 1), st.integers(0, 50), st.integers(0, 500),
       st.floats(0, 10))
def test_alpha_uct_monotone_in_sibling_visits(q, n, total, c):
    """More sibling traffic never lowers a child's score."""
    assert alpha_uct_score(q, n, total + 1, c) >= alpha_uct_score(q, n, total, c)


@given(st.floats(-1, 1), st.integers(0, 50), st.integers(1, 500),
       st.floats(0.01, 10))
def test_alpha_uct_decreases_with_own_visits(q, n, total, c):
    assert alpha_uct_score(q, n + 1, total, c) <= alpha_uct_score(q, n, total, c)


def test_policy_validation():
    with pytest.raises(ValueError):
        SelectionPolicy(kind="greedy")
    with pytest.raises(ValueError):
        SelectionPolicy(c=-0.5)
    with pytest.raises(ValueError):
        SelectionPolicy(value_mode="median")


def test_tie_break_goes_to_earliest_child():
    t = SearchTree()
    a = t.add_child(ROOT, chunk("a"), init_value=0.4)
    t.add_child(ROOT, chunk("b"), init_value=0.4)
    pol = SelectionPolicy(ALPHA_UCT, c=1.0)
    assert select_child(t, ROOT, pol) == a


def test_alpha_uct_prefers_higher_value_at_equal_visits():
    t = SearchTree()
    t.add_child(ROOT, chunk("a"), init_value=0.2)
    b = t.add_child(ROOT, chunk("b"), init_value=0.9)
    assert select_child(t, ROOT, SelectionPolicy(ALPHA_UCT, c=1.0)) == b


def test_alpha_uct_zero_visits_compete_on_score():
    # under-visited low-value child loses to a fresh high-value sibling when
    # c is small, unlike the classic rule which force-picks the fresh one
    t = SearchTree()
    a = t.add_child(ROOT, chunk("a"), init_value=0.9)
    t.nodes[a].visit_count = 3
    b = t.add_child(ROOT, chunk("b"), init_value=0.1)
    assert select_child(t, ROOT, SelectionPolicy(ALPHA_UCT, c=0.1)) == a
    assert select_child(t, ROOT, SelectionPolicy(STANDARD_UCT, c=0.1)) == b


def test_exploration_flips_choice_at_large_c():
    t = SearchTree()
    a = t.add_child(ROOT, chunk("a"), init_value=0.9)
    b = t.add_child(ROOT, chunk("b"), init_value=0.7)
    t.nodes[a].visit_count = 10
    t.nodes[b].visit_count = 1
    assert select_child(t, ROOT, SelectionPolicy(ALPHA_UCT, c=0.0)) == a
    assert select_child(t, ROOT, SelectionPolicy(ALPHA_UCT, c=2.0)) == b


def test_standard_uct_uses_log_ratio():
    t = SearchTree()
    a = t.add_child(ROOT, chunk("a"), init_value=0.6)
    b = t.add_child(ROOT, chunk("b"), init_value=0.5)
    t.nodes[ROOT].visit_count = 20
    t.nodes[a].visit_count = 18
    t.nodes[b].visit_count = 2
    # 0.6 + sqrt(ln20/18) = 1.008 vs 0.5 + sqrt(ln20/2) = 1.724
    assert select_child(t, ROOT, SelectionPolicy(STANDARD_UCT, c=1.0)) == b


def test_select_leaf_descends_to_childless_node():
    t = SearchTree()
    a = t.add_child(ROOT, chunk("a"), init_value=0.9)
    t.add_child(ROOT, chunk("b"), init_value=0.1)
    c = t.add_child(a, chunk("c"), init_value=0.8)
    assert select_leaf(t, SelectionPolicy(ALPHA_UCT, c=0.0)) == c
    assert select_leaf(t, SelectionPolicy(ALPHA_UCT, c=0.0), start=c) == c


def test_select_child_requires_children():
    with pytest.raises(TreeError):
        select_child(SearchTree(), ROOT, SelectionPolicy())
