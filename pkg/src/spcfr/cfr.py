"""Composes local regret minimizers into a treeplex regret minimizer.

One predictive minimizer lives at each decision node. A decision pass runs
bottom-up: child subtrees decide first, their decisions feed the local
counterfactual prediction, the local minimizer answers, and the subtree
decisions compose into a sequence-form strategy. Loss observation slices the
incoming sequence-form loss down the tree and feeds each node its
counterfactual loss built from this iteration's subtree decisions.

The stability schedule assigns each node a budget that shrinks with depth
(halving through decision nodes, scaled by sqrt of the branching at both
kinds), and each local stepsize is the node budget discounted by the local
subtree norm bound. With euclidean locals and scaled losses this makes every
node's iterates provably slow-moving, which is what buys the fast rate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import kernels
from .games import GameInstance
from .local_rm import get_regularizer
from .metrics import (
    SolveTrace,
    TraceRow,
    best_response_value,
    residual_to_mbbg,
)
from .treeplex import (
    DecisionNode,
    SequenceFormVector,
    TreePlex,
    TreeplexError,
    subtree_norm_bounds,
)

ALGORITHMS = ("oftrl_theory", "oftrl_scaled", "cfr_rm")
UPDATE_MODES = ("simultaneous", "alternating")


@dataclass
class StabilitySchedule:
    """Per-node stability budgets and the derived local stepsizes."""

    kappa_star: float
    gamma: dict[str, float]
    kappa: dict[str, float]
    eta: dict[str, float]
    # kernel-aligned views (decision nodes in pre-order; observation budgets
    # keyed by the sequence they hang under)
    gamma_dec: np.ndarray
    gamma_obs_seq: np.ndarray
    kappa_arr: np.ndarray
    eta_arr: np.ndarray

    def with_eta_scale(self, scale: float) -> "StabilitySchedule":
        eta = {k: v * scale for k, v in self.eta.items()}
        return replace(self, eta=eta, eta_arr=self.eta_arr * scale)


def assign_stability(tree: TreePlex, kappa_star: float) -> StabilitySchedule:
    """Derive gamma, kappa, and eta for every node from the root budget.

    gamma halves and divides by sqrt(n) through a decision node, divides by
    sqrt(n) through an observation node; kappa_j = gamma_j / (2 sqrt(n_j) B_j).
    The squared budgets are exact rationals times kappa_star^2, which the
    schedule tests exploit.
    """
    if kappa_star <= 0.0:
        raise ValueError("kappa_star must be positive")
    bounds = subtree_norm_bounds(tree)
    gamma_sq: dict[str, Fraction] = {}

    def visit(nid: str, g2: Fraction):
        gamma_sq[nid] = g2
        node = tree.nodes[nid]
        if isinstance(node, DecisionNode):
            child_g2 = g2 / (4 * len(node.actions))
            for obs in node.children:
                if obs is not None:
                    visit(obs, child_g2)
        else:
            child_g2 = g2 / len(node.signals)
            for dec in node.children:
                visit(dec, child_g2)

    visit(tree.root, Fraction(1))

    gamma = {nid: kappa_star * math.sqrt(float(g2)) for nid, g2 in gamma_sq.items()}
    kappa: dict[str, float] = {}
    eta: dict[str, float] = {}
    for nid in tree.decision_ids:
        n = len(tree.nodes[nid].actions)
        kappa[nid] = gamma[nid] / (2.0 * math.sqrt(n) * bounds[nid])
        eta[nid] = kappa[nid]

    gamma_dec = np.asarray([gamma[nid] for nid in tree.decision_ids])
    kappa_arr = np.asarray([kappa[nid] for nid in tree.decision_ids])
    gamma_obs_seq = np.full(tree.num_sequences, np.nan)
    for nid, node in tree.nodes.items():
        if not isinstance(node, DecisionNode):
            gamma_obs_seq[tree.observation_parent_seq(nid)] = gamma[nid]
    return StabilitySchedule(
        kappa_star=kappa_star,
        gamma=gamma,
        kappa=kappa,
        eta=eta,
        gamma_dec=gamma_dec,
        gamma_obs_seq=gamma_obs_seq,
        kappa_arr=kappa_arr,
        eta_arr=kappa_arr.copy(),
    )


# --------------------------------------------------------------------------
# Reference counterfactual constructions (used by the kernels' tests and the
# decomposition oracles; the solver itself runs the fused kernels)
# --------------------------------------------------------------------------


def counterfactual_loss(
    tree: TreePlex, node_id: str, loss_slice: np.ndarray, subtree_decisions: dict[str, np.ndarray]
) -> np.ndarray:
    """Local loss at a decision node: own entries plus, per action, the value
    of the child subtrees under the current subtree-local decisions."""
    d = tree.decision_index[node_id]
    lo, hi = tree.subtree_range(node_id)
    if loss_slice.shape != (hi - lo,):
        raise TreeplexError("loss fragment does not match the subtree range")
    s = int(tree.seq_start[d])
    n = int(tree.n_actions[d])
    out = loss_slice[s - lo : s - lo + n].copy()
    for a in range(n):
        q = s + a
        for c in tree.decision_children_of_seq(q):
            child_id = tree.decision_ids[c]
            clo, chi = tree.subtree_range(child_id)
            if child_id not in subtree_decisions:
                raise TreeplexError(f"missing subtree decision for {child_id!r}")
            out[a] += float(
                np.dot(loss_slice[clo - lo : chi - lo], subtree_decisions[child_id])
            )
    return out


def counterfactual_prediction(
    tree: TreePlex, node_id: str, pred_slice: np.ndarray, subtree_decisions: dict[str, np.ndarray]
) -> np.ndarray:
    """Same functional form as the counterfactual loss, with the prediction
    in place of the loss; the subtree decisions are this iteration's."""
    return counterfactual_loss(tree, node_id, pred_slice, subtree_decisions)


# --------------------------------------------------------------------------
# Treeplex regret minimizer
# --------------------------------------------------------------------------

_ALG_CODES = {"oftrl_theory": 0, "oftrl_scaled": 0, "cfr_rm": 1}
_REG_CODES = {"entropy": 0, "euclidean": 1}


class TreeplexMinimizer:
    """Sequence-form regret minimizer built from per-decision-point locals."""

    def __init__(
        self,
        tree: TreePlex,
        schedule: StabilitySchedule,
        algorithm: str = "oftrl_theory",
        regularizer: str = "entropy",
    ):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        self.tree = tree
        self.schedule = schedule
        self.algorithm = algorithm
        self.regularizer = regularizer
        self._alg_code = _ALG_CODES[algorithm]
        self._reg_code = _REG_CODES[regularizer]
        S, J = tree.num_sequences, tree.num_decision_nodes
        self.cum_lhat = np.zeros(S)  # cumulative counterfactual losses
        self.cum_played = np.zeros(J)  # per node, sum over t of <lhat_j, xhat_j>
        self.xhat = np.zeros(S)
        self.prev_xhat: np.ndarray | None = None
        self.last_mhat = np.zeros(S)
        self.last_lhat = np.zeros(S)
        self.t = 0
        self._pending = False

    def next_decision(self, m_seq: np.ndarray) -> np.ndarray:
        """Bottom-up decision pass; returns the full sequence-form strategy."""
        if self._pending:
            raise RuntimeError("next_decision called twice without observe_loss")
        if m_seq.shape != (self.tree.num_sequences,):
            raise TreeplexError("prediction vector has the wrong dimension")
        self.prev_xhat = self.xhat.copy() if self.t > 0 else None
        kernels.decision_pass(
            self.tree, self.cum_lhat, m_seq, self.schedule.eta_arr,
            self._alg_code, self._reg_code, self.cum_played,
            self.xhat, self.last_mhat,
        )
        out = np.empty(self.tree.num_sequences)
        kernels.behavioral_to_sequence(self.tree, self.xhat, out)
        self._pending = True
        return out

    def observe_loss(self, ell_seq: np.ndarray):
        """Slice the loss down the tree and feed every local minimizer."""
        if not self._pending:
            raise RuntimeError("observe_loss called before any pending decision")
        if ell_seq.shape != (self.tree.num_sequences,):
            raise TreeplexError("loss vector has the wrong dimension")
        kernels.observe_pass(
            self.tree, ell_seq, self.xhat, self.cum_lhat, self.cum_played, self.last_lhat
        )
        self.t += 1
        self._pending = False

    def counterfactual_regrets(self) -> np.ndarray:
        """Incremental hat-regret of each local minimizer."""
        J = self.tree.num_decision_nodes
        out = np.empty(J)
        for d in range(J):
            s = int(self.tree.seq_start[d])
            n = int(self.tree.n_actions[d])
            out[d] = self.cum_played[d] - self.cum_lhat[s : s + n].min()
        return out

    def stability_gaps(self) -> tuple[float, float]:
        """(max subtree-norm gap vs gamma, max local gap vs kappa) for the
        latest decision against the previous one; -inf before two decisions."""
        if self.prev_xhat is None:
            return -math.inf, -math.inf
        tree = self.tree
        J, S = tree.num_decision_nodes, tree.num_sequences
        d2_dec = np.zeros(J)
        d2_obs = np.full(S, np.nan)
        local_d2 = np.zeros(J)
        kernels.stability_pass(tree, self.xhat, self.prev_xhat, d2_dec, d2_obs, local_d2)
        # cancellation can leave squared norms at -1e-18; clamp before sqrt
        sub = float(np.max(np.sqrt(np.maximum(d2_dec, 0.0)) - self.schedule.gamma_dec))
        obs_mask = ~np.isnan(self.schedule.gamma_obs_seq)
        if obs_mask.any():
            gaps = np.sqrt(np.maximum(d2_obs[obs_mask], 0.0)) - self.schedule.gamma_obs_seq[obs_mask]
            sub = max(sub, float(gaps.max()))
        loc = float(np.max(np.sqrt(np.maximum(local_d2, 0.0)) - self.schedule.kappa_arr))
        return sub, loc


# --------------------------------------------------------------------------
# Solve loops
# --------------------------------------------------------------------------


@dataclass
class SolveOptions:
    """Run options shared by the simultaneous and alternating loops.

    ``oftrl_scaled`` multiplies every theory stepsize by 10**scale_exp, the
    tuned variants mirrored from the experiment protocol. Stability is
    tracked every iteration; ``record_iterates`` additionally stores the
    per-iteration losses and behavioral decisions for the regret oracles
    (small games only).
    """

    algorithm: str = "oftrl_theory"
    regularizer: str = "entropy"
    scale_exp: int = 0
    kappa_constant: float = 1.0
    record_every: int = 1
    record_iterates: bool = False
    timing: bool = False
    first_player: str = "x"  # alternating order: who reveals first
    on_row: object = None  # callable invoked with each TraceRow as recorded

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        get_regularizer(self.regularizer)
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if self.kappa_constant <= 0:
            raise ValueError("kappa_constant must be positive")
        if self.first_player not in ("x", "y"):
            raise ValueError("first_player must be 'x' or 'y'")


def default_record_every(T: int) -> int:
    """Power-of-two stride keeping at most 512 rows."""
    return max(1, (1 << max(0, math.ceil(math.log2(max(T, 1))))) // 512)


def make_minimizers(
    game: GameInstance, T: int, opts: SolveOptions
) -> tuple[TreeplexMinimizer, TreeplexMinimizer, float]:
    opts.validate()
    kappa_star = opts.kappa_constant * float(T) ** -0.25
    scale = 10.0 ** opts.scale_exp if opts.algorithm == "oftrl_scaled" else 1.0
    sx = assign_stability(game.treeplex_x, kappa_star).with_eta_scale(scale)
    sy = assign_stability(game.treeplex_y, kappa_star).with_eta_scale(scale)
    mx = TreeplexMinimizer(game.treeplex_x, sx, opts.algorithm, opts.regularizer)
    my = TreeplexMinimizer(game.treeplex_y, sy, opts.algorithm, opts.regularizer)
    return mx, my, kappa_star


def run_simultaneous(game: GameInstance, T: int, opts: SolveOptions | None = None) -> SolveTrace:
    return _run(game, T, opts or SolveOptions(), alternating=False)


def run_alternating(game: GameInstance, T: int, opts: SolveOptions | None = None) -> SolveTrace:
    return _run(game, T, opts or SolveOptions(), alternating=True)


def _uniform_sequence_form(tree: TreePlex) -> np.ndarray:
    xhat = np.empty(tree.num_sequences)
    for d in range(tree.num_decision_nodes):
        s = int(tree.seq_start[d])
        n = int(tree.n_actions[d])
        xhat[s : s + n] = 1.0 / n
    out = np.empty(tree.num_sequences)
    kernels.behavioral_to_sequence(tree, xhat, out)
    return out


def config_echo(game: GameInstance, T: int, opts: SolveOptions, updates: str) -> dict:
    """Configuration dictionary echoed into traces and CSV artifacts."""
    return {
        "game": game.name,
        "algorithm": opts.algorithm,
        "scale_exp": opts.scale_exp if opts.algorithm == "oftrl_scaled" else 0,
        "regularizer": opts.regularizer,
        "updates": updates,
        "T": T,
        "kappa_constant": opts.kappa_constant,
        "kappa_star": opts.kappa_constant * float(T) ** -0.25,
        "record_every": opts.record_every,
    }


def _run(game: GameInstance, T: int, opts: SolveOptions, alternating: bool) -> SolveTrace:
    if T < 1:
        raise ValueError("T must be at least 1")
    mx, my, kappa_star = make_minimizers(game, T, opts)
    tx, ty = game.treeplex_x, game.treeplex_y
    scale = game.loss_scale

    m_x = np.zeros(tx.num_sequences)  # predictions = last scaled loss
    m_y = np.zeros(ty.num_sequences)
    cum_x = np.zeros(tx.num_sequences)
    cum_y = np.zeros(ty.num_sequences)
    paired_payoff = 0.0  # sum over t of x_t^T A y_t

    trace = SolveTrace(
        game_name=game.name,
        config=config_echo(game, T, opts, "alternating" if alternating else "simultaneous"),
    )
    if opts.record_iterates:
        trace.iterates = {
            "xhat_x": [], "xhat_y": [], "loss_x": [], "loss_y": [],
            "pred_x": [], "pred_y": [],
        }

    # alternating mode: the leader observes its loss against the opponent's
    # last revealed strategy and only then reveals its own iterate, so every
    # revealed decision already incorporates this iteration's regret update;
    # the follower then answers the fresh leader iterate. The priming
    # decisions before the loop are never revealed or averaged.
    if alternating:
        x_prev_seq = mx.next_decision(m_x)
        y_prev_seq = my.next_decision(m_y)
    running_viol = -math.inf
    start = time.perf_counter()
    for t in range(1, T + 1):
        if not alternating:
            xseq = mx.next_decision(m_x)
            yseq = my.next_decision(m_y)
            gx = game.payoff_x_gradient(yseq)  # A y, payoff per x-sequence
            gy = game.payoff_y_gradient(xseq)  # A^T x
            loss_x = -scale * gx
            loss_y = scale * gy
            mx.observe_loss(loss_x)
            my.observe_loss(loss_y)
        elif opts.first_player == "x":
            loss_x = -scale * game.payoff_x_gradient(y_prev_seq)
            mx.observe_loss(loss_x)
            xseq = mx.next_decision(loss_x)
            loss_y = scale * game.payoff_y_gradient(xseq)
            my.observe_loss(loss_y)
            yseq = my.next_decision(loss_y)
            gx = game.payoff_x_gradient(yseq)
        else:
            loss_y = scale * game.payoff_y_gradient(x_prev_seq)
            my.observe_loss(loss_y)
            yseq = my.next_decision(loss_y)
            loss_x = -scale * game.payoff_x_gradient(yseq)
            mx.observe_loss(loss_x)
            xseq = mx.next_decision(loss_x)
            gx = game.payoff_x_gradient(yseq)
        m_x = loss_x
        m_y = loss_y
        x_prev_seq = xseq
        y_prev_seq = yseq

        paired_payoff += float(np.dot(gx, xseq))
        cum_x += xseq
        cum_y += yseq

        sub_x, loc_x = mx.stability_gaps()
        sub_y, loc_y = my.stability_gaps()
        trace.subtree_gaps.append(max(sub_x, sub_y))
        trace.local_gaps.append(max(loc_x, loc_y))
        running_viol = max(running_viol, sub_x, sub_y, loc_x, loc_y)
        if opts.record_iterates:
            trace.iterates["xhat_x"].append(mx.xhat.copy())
            trace.iterates["xhat_y"].append(my.xhat.copy())
            trace.iterates["loss_x"].append(loss_x.copy())
            trace.iterates["loss_y"].append(loss_y.copy())
            trace.iterates["pred_x"].append(mx.last_mhat.copy())
            trace.iterates["pred_y"].append(my.last_mhat.copy())

        if t % opts.record_every == 0 or t == T:
            avg_x = SequenceFormVector(tx, cum_x / t, kind="strategy")
            avg_y = SequenceFormVector(ty, cum_y / t, kind="strategy")
            br_x, _ = best_response_value(game, "x", avg_y)
            br_y, _ = best_response_value(game, "y", avg_x)
            residual = br_x - br_y
            regret_x = t * br_x - paired_payoff
            regret_y = paired_payoff - t * br_y
            wall = (time.perf_counter() - start) * 1000.0 if opts.timing else 0.0
            row = TraceRow(
                t=t,
                residual=residual,
                residual_mbbg=residual_to_mbbg(residual, game.big_blind),
                regret_x=regret_x,
                regret_y=regret_y,
                # vacuous before two decisions exist to compare
                max_stability_violation=running_viol if math.isfinite(running_viol) else math.nan,
                wall_ms=wall,
            )
            trace.rows.append(row)
            if opts.on_row is not None:
                opts.on_row(row)

    trace.final_x = SequenceFormVector(tx, cum_x / T, kind="strategy")
    trace.final_y = SequenceFormVector(ty, cum_y / T, kind="strategy")
    return trace


def average_strategies(trace: SolveTrace) -> tuple[SequenceFormVector, SequenceFormVector]:
    """Uniform averages of both players' iterates (already maintained)."""
    if trace.final_x is None or trace.final_y is None:
        raise ValueError("trace has no recorded averages")
    return trace.final_x, trace.final_y
