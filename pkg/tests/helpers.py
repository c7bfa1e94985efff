"""Independent oracles used to freeze expected values in the tests.

Everything here deliberately avoids the solver's code paths: the tree walk
evaluates the extensive form directly, the LP oracle solves the sequence-form
linear program with scipy, and the recursive product evaluator re-derives
sequence forms from the definition.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from spcfr.games import (
    ChanceNode,
    ExtensiveFormGame,
    GameInstance,
    PlayerNode,
    TerminalNode,
)
from spcfr.treeplex import (
    BehavioralStrategy,
    DecisionNode,
    ObservationNode,
    TreePlex,
)


def tree_walk_payoff(
    efg: ExtensiveFormGame, beh1: dict[str, np.ndarray], beh2: dict[str, np.ndarray]
) -> float:
    """Expected payoff to player 1 by direct recursion over the game tree."""

    def walk(nid: str) -> float:
        node = efg.nodes[nid]
        if isinstance(node, TerminalNode):
            return node.payoff
        if isinstance(node, ChanceNode):
            return sum(p * walk(c) for p, c in zip(node.probs, node.children))
        probs = beh1[node.infoset] if node.owner == 1 else beh2[node.infoset]
        return sum(float(probs[a]) * walk(c) for a, c in enumerate(node.children))

    return walk(efg.root)


def recursive_sequence_form(tree: TreePlex, b: BehavioralStrategy) -> np.ndarray:
    """Sequence form straight from the definition: each entry is the product
    of the behavioral probabilities on the path from the root."""
    out = np.zeros(tree.num_sequences)

    def visit(nid: str, reach: float):
        node = tree.nodes[nid]
        for a in range(len(node.actions)):
            q = tree.sequence_index[(nid, a)]
            p = reach * float(b.probs[nid][a])
            out[q] = p
            obs = node.children[a]
            if obs is not None:
                for dec in tree.nodes[obs].children:
                    visit(dec, p)

    visit(tree.root, 1.0)
    return out


def flow_matrix(tree: TreePlex):
    """Sequence-form constraint system E v = e for strategy vectors."""
    J, S = tree.num_decision_nodes, tree.num_sequences
    E = np.zeros((J, S))
    e = np.zeros(J)
    for d in range(J):
        s = int(tree.seq_start[d])
        n = int(tree.n_actions[d])
        E[d, s : s + n] = 1.0
        p = int(tree.parent_seq[d])
        if p < 0:
            e[d] = 1.0
        else:
            E[d, p] = -1.0
    return E, e


def dense_payoff(game: GameInstance) -> np.ndarray:
    A = np.zeros((game.treeplex_x.num_sequences, game.treeplex_y.num_sequences))
    A[game.payoff_rows, game.payoff_cols] = game.payoff_vals
    return A


def lp_solve_game(game: GameInstance):
    """Exact sequence-form LP solution: (value to player 1, x*, y*).

    Player 1 maximizes x^T A y. The x-side LP maximizes the dual value of
    player 2's inner minimization; the y-side LP is symmetric.
    """
    A = dense_payoff(game)
    Ex, ex = flow_matrix(game.treeplex_x)
    Fy, fy = flow_matrix(game.treeplex_y)
    Sx, Sy = A.shape
    Jy = Fy.shape[0]

    # variables [x, v]; maximize fy.v  s.t.  Fy^T v <= A^T x, Ex x = ex, x >= 0
    c = np.concatenate([np.zeros(Sx), -fy])
    A_ub = np.hstack([-A.T, Fy.T])
    b_ub = np.zeros(Sy)
    A_eq = np.hstack([Ex, np.zeros((Ex.shape[0], Jy))])
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=ex,
        bounds=[(0, None)] * Sx + [(None, None)] * Jy, method="highs",
    )
    assert res.status == 0, res.message
    x_star = res.x[:Sx]
    value = -res.fun

    Jx = Ex.shape[0]
    # variables [y, u]; minimize ex.u  s.t.  A y <= Ex^T u, Fy y = fy, y >= 0
    c2 = np.concatenate([np.zeros(Sy), ex])
    A_ub2 = np.hstack([A, -Ex.T])
    b_ub2 = np.zeros(Sx)
    A_eq2 = np.hstack([Fy, np.zeros((Jy, Jx))])
    res2 = linprog(
        c2, A_ub=A_ub2, b_ub=b_ub2, A_eq=A_eq2, b_eq=fy,
        bounds=[(0, None)] * Sy + [(None, None)] * Jx, method="highs",
    )
    assert res2.status == 0, res2.message
    y_star = res2.x[:Sy]
    assert abs(res2.fun - value) < 1e-7
    return value, x_star, y_star


def matrix_game_value(M: np.ndarray) -> float:
    """Value of max_p min_q p^T M q over mixed strategies, by LP."""
    rows, cols = M.shape
    # variables [p, v]; maximize v s.t. M^T p >= v 1, sum p = 1, p >= 0
    c = np.concatenate([np.zeros(rows), [-1.0]])
    A_ub = np.hstack([-M.T, np.ones((cols, 1))])
    b_ub = np.zeros(cols)
    A_eq = np.concatenate([np.ones(rows), [0.0]])[None, :]
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
        bounds=[(0, None)] * rows + [(None, None)], method="highs",
    )
    assert res.status == 0, res.message
    return -res.fun


def random_treeplex(rng: np.random.Generator, max_depth: int = 3, max_branch: int = 3) -> TreePlex:
    """Random well-formed treeplex with a decision-node root."""
    nodes = []
    counter = 0

    def fresh(prefix: str) -> str:
        nonlocal counter
        counter += 1
        return f"{prefix}{counter}"

    def decision(depth: int) -> str:
        n = int(rng.integers(1, max_branch + 1))
        children = []
        for _ in range(n):
            if depth < max_depth and rng.random() < 0.6:
                k = int(rng.integers(1, max_branch + 1))
                kids = tuple(decision(depth + 1) for _ in range(k))
                oid = fresh("o")
                nodes.append(ObservationNode(oid, tuple(f"s{i}" for i in range(k)), kids))
                children.append(oid)
            else:
                children.append(None)
        nid = fresh("d")
        nodes.append(DecisionNode(nid, tuple(f"a{i}" for i in range(n)), tuple(children)))
        return nid

    root = decision(0)
    return TreePlex(nodes, root)


def subtree_played_values(tree: TreePlex, xhat: np.ndarray, loss: np.ndarray):
    """One bottom-up pass: <loss slice, local decision> at every decision node
    (by node index) and every observation node (keyed by parent sequence)."""
    J = tree.num_decision_nodes
    dec = np.zeros(J)
    obs: dict[int, float] = {}
    for d in range(J - 1, -1, -1):
        s = int(tree.seq_start[d])
        n = int(tree.n_actions[d])
        total = 0.0
        for a in range(n):
            q = s + a
            acc = loss[q]
            kids = tree.decision_children_of_seq(q)
            if kids:
                obs[q] = sum(dec[c] for c in kids)
                acc += obs[q]
            total += acc * xhat[q]
        dec[d] = total
    return dec, obs


def cumulative_counterfactual_losses(tree: TreePlex, xhats, losses) -> np.ndarray:
    """Sum over time of the counterfactual loss vectors (flat, per sequence),
    rebuilt from first principles for the decomposition oracles."""
    out = np.zeros(tree.num_sequences)
    for xhat, loss in zip(xhats, losses):
        dec, obs = subtree_played_values(tree, xhat, loss)
        for d in range(tree.num_decision_nodes):
            s = int(tree.seq_start[d])
            n = int(tree.n_actions[d])
            for a in range(n):
                q = s + a
                out[q] += loss[q] + obs.get(q, 0.0)
    return out
