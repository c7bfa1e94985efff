"""Best response, saddle-point residual, oracle regrets, and rate fitting.

Player x (player 1) maximizes the bilinear payoff, player y minimizes it, so
``best_response_value(game, "x", y_bar)`` is the highest payoff any x-strategy
achieves against the fixed opponent and the y-side call is the lowest. Their
difference is the saddle-point residual (exploitability): zero exactly at a
Nash equilibrium.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .games import GameInstance
from .treeplex import SequenceFormVector, TreePlex, TreeplexError

VERTEX_ENUMERATION_CAP = 1 << 16


@dataclass
class TraceRow:
    t: int
    residual: float
    residual_mbbg: float
    regret_x: float
    regret_y: float
    max_stability_violation: float
    wall_ms: float


@dataclass
class SolveTrace:
    """Per-iteration records of one solver run plus the final averages."""

    game_name: str
    config: dict
    rows: list[TraceRow] = field(default_factory=list)
    final_x: SequenceFormVector | None = None
    final_y: SequenceFormVector | None = None
    # per-iteration stability gaps (filled when tracking is enabled):
    # max over nodes of ||subtree change|| - gamma and ||local change|| - kappa
    subtree_gaps: list[float] = field(default_factory=list)
    local_gaps: list[float] = field(default_factory=list)
    # optional per-iteration iterates for oracle checks (small games only)
    iterates: dict = field(default_factory=dict)

    @property
    def ts(self) -> np.ndarray:
        return np.asarray([r.t for r in self.rows], dtype=np.int64)

    @property
    def residuals(self) -> np.ndarray:
        return np.asarray([r.residual for r in self.rows])

    def check(self, tol: float = 1e-9):
        ts = self.ts
        if np.any(np.diff(ts) <= 0):
            raise ValueError("trace iterations are not strictly increasing")
        if np.any(self.residuals < -tol):
            raise ValueError("trace contains negative residuals")


def best_response_value(
    game: GameInstance, side: str, opponent: SequenceFormVector
) -> tuple[float, SequenceFormVector]:
    """Exact pure best response by backward induction on the responder's
    treeplex. Side ``x`` maximizes player 1's payoff against a fixed y;
    side ``y`` minimizes it against a fixed x. Ties break toward the lowest
    action index."""
    if side == "x":
        if opponent.tree is not game.treeplex_y:
            raise TreeplexError("x-side best response expects a y-strategy opponent")
        grad = game.payoff_x_gradient(opponent.values)
        tree = game.treeplex_x
        maximize = True
    elif side == "y":
        if opponent.tree is not game.treeplex_x:
            raise TreeplexError("y-side best response expects an x-strategy opponent")
        grad = game.payoff_y_gradient(opponent.values)
        tree = game.treeplex_y
        maximize = False
    else:
        raise ValueError(f"side must be 'x' or 'y', got {side!r}")
    out = np.zeros(tree.num_sequences)
    value = kernels.best_response_pass(tree, grad, maximize, out)
    return float(value), SequenceFormVector(tree, out, kind="strategy")


def saddle_residual(game: GameInstance, x: SequenceFormVector, y: SequenceFormVector) -> float:
    """Sum of both players' best-response improvements; >= 0, 0 iff Nash."""
    br_x, _ = best_response_value(game, "x", y)
    br_y, _ = best_response_value(game, "y", x)
    return br_x - br_y


def residual_to_mbbg(residual: float, big_blind: float) -> float:
    """Milli big blinds per game."""
    if big_blind <= 0:
        raise ValueError("big blind must be positive")
    return residual / big_blind * 1000.0


# --------------------------------------------------------------------------
# Oracle regrets over subtree vertices
# --------------------------------------------------------------------------


def count_subtree_vertices(tree: TreePlex, node_id: str) -> int:
    """Number of deterministic sequence-form strategies at or below a node."""

    def dec(d: int) -> int:
        s = int(tree.seq_start[d])
        n = int(tree.n_actions[d])
        total = 0
        for a in range(n):
            prod = 1
            for c in tree.decision_children_of_seq(s + a):
                prod *= dec(c)
            total += prod
        return total

    if tree.is_decision(node_id):
        return dec(tree.decision_index[node_id])
    prod = 1
    for d in _obs_child_decisions(tree, node_id):
        prod *= dec(d)
    return prod


def _obs_child_decisions(tree: TreePlex, obs_id: str) -> list[int]:
    q = tree.observation_parent_seq(obs_id)
    return tree.decision_children_of_seq(q)


def enumerate_subtree_vertices(tree: TreePlex, node_id: str) -> np.ndarray:
    """All deterministic local sequence-form vectors below ``node_id``.

    Returns a (num_vertices, subtree_size) 0/1 matrix over the subtree's
    local index range. Guarded by :data:`VERTEX_ENUMERATION_CAP`.
    """
    count = count_subtree_vertices(tree, node_id)
    if count > VERTEX_ENUMERATION_CAP:
        raise ValueError(
            f"{count} vertices below {node_id!r} exceeds the enumeration cap "
            f"{VERTEX_ENUMERATION_CAP}"
        )
    lo, hi = tree.subtree_range(node_id)
    width = hi - lo

    def dec(d: int) -> list[np.ndarray]:
        s = int(tree.seq_start[d])
        n = int(tree.n_actions[d])
        out = []
        for a in range(n):
            q = s + a
            base = np.zeros(width)
            base[q - lo] = 1.0
            parts: list[list[np.ndarray]] = [
                dec(c) for c in tree.decision_children_of_seq(q)
            ]
            if not parts:
                out.append(base)
                continue
            for combo in itertools.product(*parts):
                v = base.copy()
                for piece in combo:
                    v += piece
                out.append(v)
        return out

    if tree.is_decision(node_id):
        vertices = dec(tree.decision_index[node_id])
    else:
        parts = [dec(d) for d in _obs_child_decisions(tree, node_id)]
        vertices = []
        for combo in itertools.product(*parts):
            v = np.zeros(width)
            for piece in combo:
                v += piece
            vertices.append(v)
    return np.asarray(vertices)


def min_over_subtree_vertices(tree: TreePlex, node_id: str, cost: np.ndarray) -> float:
    """Exact min of <cost, v> over the subtree's deterministic strategies.

    Uses literal vertex enumeration when the count fits under the cap and
    falls back to the equivalent dynamic program otherwise (the minimum of a
    linear function over the polytope is attained at a vertex either way).
    """
    lo, hi = tree.subtree_range(node_id)
    if cost.shape != (hi - lo,):
        raise ValueError("cost fragment does not match the subtree range")
    if count_subtree_vertices(tree, node_id) <= VERTEX_ENUMERATION_CAP:
        verts = enumerate_subtree_vertices(tree, node_id)
        return float((verts @ cost).min())
    return _min_by_induction(tree, node_id, cost, lo)


def _min_by_induction(tree: TreePlex, node_id: str, cost: np.ndarray, offset: int) -> float:
    def dec(d: int) -> float:
        s = int(tree.seq_start[d])
        n = int(tree.n_actions[d])
        best = math.inf
        for a in range(n):
            q = s + a
            acc = cost[q - offset]
            for c in tree.decision_children_of_seq(q):
                acc += dec(c)
            best = min(best, acc)
        return best

    if tree.is_decision(node_id):
        return dec(tree.decision_index[node_id])
    return sum(dec(d) for d in _obs_child_decisions(tree, node_id))


BRUTE_FORCE_SEQUENCE_GUARD = 1000


def brute_force_regret(
    tree: TreePlex,
    node_id: str,
    losses: list[np.ndarray],
    played_values: list[float] | None = None,
    xhats: list[np.ndarray] | None = None,
) -> float:
    """Subtree regret at ``node_id`` computed from first principles.

    ``losses`` are the full sequence-form loss vectors of each iteration;
    played values (<loss slice, local decision>) can be supplied directly or
    recomputed from the per-iteration behavioral arrays ``xhats``. Guarded
    against subtrees too large for an oracle-grade recomputation.
    """
    lo, hi = tree.subtree_range(node_id)
    if hi - lo > BRUTE_FORCE_SEQUENCE_GUARD:
        raise ValueError(
            f"{hi - lo} sequences below {node_id!r} exceeds the oracle guard "
            f"{BRUTE_FORCE_SEQUENCE_GUARD}"
        )
    if played_values is None:
        if xhats is None:
            raise ValueError("need either played_values or xhats")
        played_values = [
            float(np.dot(l[lo:hi], local_sequence_form(tree, xh, node_id)))
            for l, xh in zip(losses, xhats)
        ]
    cum = np.zeros(hi - lo)
    for l in losses:
        cum += l[lo:hi]
    return float(sum(played_values)) - min_over_subtree_vertices(tree, node_id, cum)


def local_sequence_form(tree: TreePlex, xhat: np.ndarray, node_id: str) -> np.ndarray:
    """Subtree-local sequence form below ``node_id`` (renormalized at the
    node, no reach scaling from above), from flat behavioral probabilities."""
    lo, hi = tree.subtree_range(node_id)
    out = np.zeros(hi - lo)

    def dec(d: int, mass: float):
        s = int(tree.seq_start[d])
        n = int(tree.n_actions[d])
        for a in range(n):
            q = s + a
            out[q - lo] = mass * xhat[q]
            for c in tree.decision_children_of_seq(q):
                dec(c, mass * xhat[q])

    if tree.is_decision(node_id):
        dec(tree.decision_index[node_id], 1.0)
    else:
        for d in _obs_child_decisions(tree, node_id):
            dec(d, 1.0)
    return out


# --------------------------------------------------------------------------
# Convergence-rate fitting
# --------------------------------------------------------------------------


def fit_convergence_rate(trace) -> tuple[float, float]:
    """Least-squares slope of log residual vs log t over the last half.

    Accepts a :class:`SolveTrace` or a ``(ts, residuals)`` pair; non-positive
    residuals are excluded. Returns ``(exponent, constant)`` for the model
    ``residual = constant * t**exponent``.
    """
    if isinstance(trace, SolveTrace):
        ts, res = trace.ts, trace.residuals
    else:
        ts, res = trace
        ts = np.asarray(ts, dtype=np.float64)
        res = np.asarray(res, dtype=np.float64)
    if ts.size < 64:
        raise ValueError("need at least 64 recorded iterations to fit a rate")
    half = ts.size // 2
    ts, res = ts[half:], res[half:]
    keep = res > 0.0
    ts, res = ts[keep], res[keep]
    if ts.size < 2:
        raise ValueError("not enough positive residuals to fit a rate")
    lx = np.log(ts.astype(np.float64))
    ly = np.log(res)
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(math.exp(intercept))
