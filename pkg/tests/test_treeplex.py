import math

import numpy as np
import pytest

from helpers import random_treeplex, recursive_sequence_form
from spcfr import metrics
from spcfr.treeplex import (
    BehavioralStrategy,
    DecisionNode,
    ObservationNode,
    SequenceFormVector,
    TreePlex,
    TreeplexError,
    random_behavioral,
    slice_down,
    subtree_norm_bounds,
    to_behavioral,
    to_sequence_form,
    uniform_behavioral,
)


def test_kuhn_uniform_product_entries(kuhn):
    tree = kuhn.treeplex_x
    v = to_sequence_form(tree, uniform_behavioral(tree))
    # post-raise fold entry: 1 (start) * 0.5 (check) * 0.5 (fold)
    node = "1:J:cr"
    fold = tree.nodes[node].actions.index("fold")
    assert v.values[tree.sequence_index[(node, fold)]] == pytest.approx(0.25, abs=1e-15)
    v.validate_strategy()


def test_deterministic_strategy_is_unit_vector(kuhn, rng):
    tree = kuhn.treeplex_x
    probs = {}
    for nid in tree.decision_ids:
        n = len(tree.nodes[nid].actions)
        p = np.zeros(n)
        p[rng.integers(n)] = 1.0
        probs[nid] = p
    v = to_sequence_form(tree, BehavioralStrategy(tree, probs))
    assert set(np.round(v.values, 12)) <= {0.0, 1.0}
    # exactly one unit entry per reachable decision node
    for d, nid in enumerate(tree.decision_ids):
        s, e = tree.action_range(nid)
        p = tree.parent_seq[d]
        reach = 1.0 if p < 0 else v.values[p]
        assert v.values[s:e].sum() == pytest.approx(reach, abs=1e-15)


def test_sequence_form_matches_recursive_definition(rng):
    for _ in range(10):
        tree = random_treeplex(rng)
        b = random_behavioral(tree, rng)
        v = to_sequence_form(tree, b)
        oracle = recursive_sequence_form(tree, b)
        assert np.max(np.abs(v.values - oracle)) < 1e-12
        res = np.abs(
            np.asarray(
                [
                    v.values[tree.seq_start[d] : tree.seq_start[d] + tree.n_actions[d]].sum()
                    - (1.0 if tree.parent_seq[d] < 0 else v.values[tree.parent_seq[d]])
                    for d in range(tree.num_decision_nodes)
                ]
            )
        )
        assert res.max() < 1e-12


def test_round_trip_uniform(kuhn):
    tree = kuhn.treeplex_x
    v = to_sequence_form(tree, uniform_behavioral(tree))
    back = to_behavioral(tree, v)
    for nid, p in back.probs.items():
        assert np.allclose(p, 1.0 / len(p), atol=1e-15)


def test_round_trip_random_strategies(rng):
    for _ in range(20):
        tree = random_treeplex(rng)
        b = random_behavioral(tree, rng)
        v = to_sequence_form(tree, b)
        rt = to_sequence_form(tree, to_behavioral(tree, v))
        assert np.max(np.abs(rt.values - v.values)) < 1e-9


def test_zero_reach_gives_uniform(kuhn):
    tree = kuhn.treeplex_x
    probs = {
        nid: np.eye(len(tree.nodes[nid].actions))[0] for nid in tree.decision_ids
    }
    # kill the reach of the post-raise nodes by never checking
    for nid in ("1:J", "1:Q", "1:K"):
        probs[nid] = np.array([0.0, 1.0])  # always raise
    v = to_sequence_form(tree, BehavioralStrategy(tree, probs))
    back = to_behavioral(tree, v)
    for card in "JQK":
        assert np.allclose(back.probs[f"1:{card}:cr"], [0.5, 0.5])


def test_slice_down_root_and_leaf(kuhn):
    tree = kuhn.treeplex_x
    v = to_sequence_form(tree, uniform_behavioral(tree))
    assert np.array_equal(slice_down(v, tree.root), v.values)
    leaf = "1:J:cr"
    assert slice_down(v, leaf).shape == (2,)


def test_slice_down_kuhn_first_infoset(kuhn):
    tree = kuhn.treeplex_x
    v = to_sequence_form(tree, uniform_behavioral(tree))
    frag = slice_down(v, "1:J")
    labels = [tree.seq_labels[q] for q in range(*tree.subtree_range("1:J"))]
    assert labels == [
        ("1:J", "check"),
        ("1:J", "raise"),
        ("1:J:cr", "fold"),
        ("1:J:cr", "call"),
    ]
    assert frag.shape == (4,)


def test_slice_down_unknown_node(kuhn):
    v = to_sequence_form(kuhn.treeplex_x, uniform_behavioral(kuhn.treeplex_x))
    with pytest.raises(TreeplexError):
        slice_down(v, "nope")


def test_sibling_slices_partition_parent(rng):
    for _ in range(5):
        tree = random_treeplex(rng)
        for nid, node in tree.nodes.items():
            if isinstance(node, ObservationNode):
                lo, hi = tree.subtree_range(nid)
                spans = [tree.subtree_range(d) for d in node.children]
                covered = sorted(spans)
                assert covered[0][0] == lo and covered[-1][1] == hi
                for (a, b), (c, d) in zip(covered, covered[1:]):
                    assert b == c  # contiguous, disjoint


def test_norm_bounds_handcrafted():
    leaf1 = DecisionNode("l1", ("a", "b"), (None, None))
    leaf2 = DecisionNode("l2", ("a", "b"), (None, None))
    obs = ObservationNode("o", ("s1", "s2"), ("l1", "l2"))
    root = DecisionNode("r", ("go",), ("o",))
    tree = TreePlex([leaf1, leaf2, obs, root], "r")
    bounds = subtree_norm_bounds(tree)
    assert bounds["l1"] == pytest.approx(1.0)
    assert bounds["o"] == pytest.approx(math.sqrt(2))
    assert bounds["r"] == pytest.approx(math.sqrt(3))


def test_kuhn_root_bound_sqrt7_and_vertex_oracle(kuhn):
    tree = kuhn.treeplex_x
    bounds = subtree_norm_bounds(tree)
    assert bounds[tree.root] == pytest.approx(math.sqrt(7), abs=1e-12)
    vertices = metrics.enumerate_subtree_vertices(tree, tree.root)
    max_norm = np.sqrt((vertices**2).sum(axis=1)).max()
    assert max_norm <= math.sqrt(7) + 1e-12
    assert max_norm == pytest.approx(math.sqrt(7), abs=1e-12)


def test_slice_norm_within_bound(rng):
    trees = [random_treeplex(rng) for _ in range(10)]
    for tree in trees:
        bounds = subtree_norm_bounds(tree)
        for _ in range(20):
            v = to_sequence_form(tree, random_behavioral(tree, rng))
            for nid in tree.nodes:
                assert np.linalg.norm(slice_down(v, nid)) <= bounds[nid] + 1e-9


def test_flow_conservation_many_trees(rng):
    # 50 trees x 20 strategies = 1000 random behavioral strategies
    for _ in range(50):
        tree = random_treeplex(rng)
        for _ in range(20):
            v = to_sequence_form(tree, random_behavioral(tree, rng))
            v.validate_strategy(tol=1e-9)


def test_structural_errors():
    with pytest.raises(TreeplexError):
        DecisionNode("d", (), ())
    with pytest.raises(TreeplexError):
        TreePlex([DecisionNode("d", ("a",), (None,))], "missing")
    # cycle / double parent
    l1 = DecisionNode("l1", ("a",), (None,))
    o1 = ObservationNode("o1", ("s", "t"), ("l1", "l1"))
    r = DecisionNode("r", ("a",), ("o1",))
    with pytest.raises(TreeplexError):
        TreePlex([l1, o1, r], "r")


def test_vector_dimension_mismatch(kuhn):
    with pytest.raises(TreeplexError):
        SequenceFormVector(kuhn.treeplex_x, np.zeros(3))
    other = kuhn.treeplex_y
    b = uniform_behavioral(other)
    with pytest.raises(TreeplexError):
        to_sequence_form(kuhn.treeplex_x, b)
