"""Concrete games: extensive-form trees, the text file format, and the
conversion into the two-treeplex bilinear form solved by the CFR loop.

Sign convention (single source of truth): the payoff operator ``A`` stores
the expected utility of player 1 (the ``x`` player), with chance
probabilities folded into the terminal values. Player x maximizes ``x^T A y``
and its online loss is ``-A y``; player y minimizes and its loss is
``A^T x``. All residuals are reported in these unscaled payoff units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .treeplex import (
    DecisionNode,
    ObservationNode,
    SequenceFormVector,
    TreePlex,
    TreeplexError,
    subtree_norm_bounds,
)

SIZE_GUARD_SEQUENCES = 10**6


class GameFormatError(ValueError):
    """Game file or extensive-form structure rejected; carries the line."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where = f" ({where})"
        super().__init__(message + where)


class SizeGuardError(ValueError):
    """Requested instance exceeds the sequence-count guard."""


# --------------------------------------------------------------------------
# Extensive-form game representation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChanceNode:
    id: str
    probs: tuple[float, ...]
    children: tuple[str, ...]


@dataclass(frozen=True)
class PlayerNode:
    id: str
    owner: int  # 1 or 2
    infoset: str
    actions: tuple[str, ...]
    children: tuple[str, ...]


@dataclass(frozen=True)
class TerminalNode:
    id: str
    payoff: float  # to player 1


EfgNode = ChanceNode | PlayerNode | TerminalNode


@dataclass
class ExtensiveFormGame:
    nodes: dict[str, EfgNode]
    root: str

    def validate(self, tol: float = 1e-9):
        """Check tree structure, chance sums, infoset consistency, perfect recall."""
        if self.root not in self.nodes:
            raise GameFormatError(f"unknown root id {self.root!r}")
        seen: set[str] = set()
        infoset_shape: dict[str, tuple[int, tuple[str, ...]]] = {}
        infoset_ownseq: dict[str, tuple] = {}
        # own_seq per player: tuple of (infoset, action index) pairs on the path
        stack: list[tuple[str, tuple, tuple]] = [(self.root, (), ())]
        while stack:
            nid, own1, own2 = stack.pop()
            if nid not in self.nodes:
                raise GameFormatError(f"dangling child id {nid!r}")
            if nid in seen:
                raise GameFormatError(f"node {nid!r} has more than one parent")
            seen.add(nid)
            node = self.nodes[nid]
            if isinstance(node, TerminalNode):
                continue
            if isinstance(node, ChanceNode):
                total = sum(node.probs)
                if abs(total - 1.0) > tol:
                    raise GameFormatError(
                        f"chance node {nid!r} probabilities sum to {total!r}, expected 1"
                    )
                if any(p < 0 for p in node.probs):
                    raise GameFormatError(f"chance node {nid!r} has a negative probability")
                for child in node.children:
                    stack.append((child, own1, own2))
                continue
            shape = (node.owner, node.actions)
            prev = infoset_shape.setdefault(node.infoset, shape)
            if prev != shape:
                raise GameFormatError(
                    f"infoset {node.infoset!r} mixes owners or action lists (node {nid!r})"
                )
            own = own1 if node.owner == 1 else own2
            prev_seq = infoset_ownseq.setdefault(node.infoset, own)
            if prev_seq != own:
                raise GameFormatError(
                    f"perfect recall violated at infoset {node.infoset!r} (node {nid!r})"
                )
            for a, child in enumerate(node.children):
                ext = own + ((node.infoset, a),)
                if node.owner == 1:
                    stack.append((child, ext, own2))
                else:
                    stack.append((child, own1, ext))
        unreachable = set(self.nodes) - seen
        if unreachable:
            raise GameFormatError(f"nodes unreachable from root: {sorted(unreachable)}")


# --------------------------------------------------------------------------
# File format
# --------------------------------------------------------------------------


def parse_game_file(text: str) -> ExtensiveFormGame:
    """Parse the line-based game format.

    Lines: ``root <id>``, ``chance <id> <prob>:<child> ...``,
    ``player <id> <1|2> <infoset> <action>:<child> ...``,
    ``terminal <id> <payoff>``. ``#`` starts a comment.
    """
    nodes: dict[str, EfgNode] = {}
    root: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "root":
            if len(tokens) != 2:
                raise GameFormatError("root line expects exactly one id", lineno)
            if root is not None:
                raise GameFormatError("duplicate root line", lineno)
            root = tokens[1]
            continue
        if kind not in {"chance", "player", "terminal"}:
            raise GameFormatError(f"unknown record kind {kind!r}", lineno, raw.find(kind) + 1)
        if len(tokens) < 2:
            raise GameFormatError(f"{kind} line is missing an id", lineno)
        nid = tokens[1]
        if nid in nodes:
            raise GameFormatError(f"duplicate node id {nid!r}", lineno)
        if kind == "terminal":
            if len(tokens) != 3:
                raise GameFormatError("terminal line expects `terminal <id> <payoff>`", lineno)
            try:
                payoff = float(tokens[2])
            except ValueError:
                raise GameFormatError(f"bad payoff literal {tokens[2]!r}", lineno) from None
            nodes[nid] = TerminalNode(nid, payoff)
        elif kind == "chance":
            probs: list[float] = []
            children: list[str] = []
            for tok in tokens[2:]:
                if ":" not in tok:
                    raise GameFormatError(f"bad outcome token {tok!r}, expected <prob>:<child>", lineno)
                p_str, child = tok.split(":", 1)
                try:
                    probs.append(float(p_str))
                except ValueError:
                    raise GameFormatError(f"bad probability literal {p_str!r}", lineno) from None
                children.append(child)
            if not children:
                raise GameFormatError(f"chance node {nid!r} has no outcomes", lineno)
            nodes[nid] = ChanceNode(nid, tuple(probs), tuple(children))
        else:
            if len(tokens) < 5:
                raise GameFormatError(
                    "player line expects `player <id> <1|2> <infoset> <action>:<child> ...`", lineno
                )
            if tokens[2] not in {"1", "2"}:
                raise GameFormatError(f"bad owner {tokens[2]!r}, expected 1 or 2", lineno)
            owner = int(tokens[2])
            infoset = tokens[3]
            actions: list[str] = []
            children = []
            for tok in tokens[4:]:
                if ":" not in tok:
                    raise GameFormatError(f"bad action token {tok!r}, expected <action>:<child>", lineno)
                action, child = tok.split(":", 1)
                actions.append(action)
                children.append(child)
            nodes[nid] = PlayerNode(nid, owner, infoset, tuple(actions), tuple(children))
    if root is None:
        raise GameFormatError("missing root line")
    efg = ExtensiveFormGame(nodes, root)
    efg.validate()
    return efg


def export_game_file(efg: ExtensiveFormGame) -> str:
    """Serialize in depth-first pre-order; reparsing yields an isomorphic game."""
    lines = [f"root {efg.root}"]
    seen: set[str] = set()

    def visit(nid: str):
        if nid in seen:
            return
        seen.add(nid)
        node = efg.nodes[nid]
        if isinstance(node, TerminalNode):
            lines.append(f"terminal {nid} {node.payoff!r}")
            return
        if isinstance(node, ChanceNode):
            outs = " ".join(f"{p!r}:{c}" for p, c in zip(node.probs, node.children))
            lines.append(f"chance {nid} {outs}")
        else:
            outs = " ".join(f"{a}:{c}" for a, c in zip(node.actions, node.children))
            lines.append(f"player {nid} {node.owner} {node.infoset} {outs}")
        for child in node.children:
            visit(child)

    visit(efg.root)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Sequence-form conversion
# --------------------------------------------------------------------------

ROOT_DECISION = "<root>"
ROOT_ACTION = "start"


@dataclass
class GameInstance:
    """Two treeplexes plus the sparse bilinear payoff operator.

    ``payoff_norm`` upper-bounds the operator 2-norm; ``loss_scale`` is the
    factor applied to online losses so every counterfactual loss and
    prediction has dual norm at most 1/3, as the theory-driven stepsize rule
    requires.
    """

    name: str
    treeplex_x: TreePlex
    treeplex_y: TreePlex
    payoff_rows: np.ndarray
    payoff_cols: np.ndarray
    payoff_vals: np.ndarray
    payoff_norm: float
    loss_scale: float
    big_blind: float = 1.0

    def payoff_x_gradient(self, y_values: np.ndarray) -> np.ndarray:
        """A @ y: player 1's expected payoff per x-sequence."""
        return kernels.coo_matvec(
            self.payoff_rows, self.payoff_cols, self.payoff_vals,
            np.asarray(y_values, dtype=np.float64), self.treeplex_x.num_sequences,
        )

    def payoff_y_gradient(self, x_values: np.ndarray) -> np.ndarray:
        """A^T @ x: player 1's expected payoff per y-sequence."""
        return kernels.coo_matvec(
            self.payoff_cols, self.payoff_rows, self.payoff_vals,
            np.asarray(x_values, dtype=np.float64), self.treeplex_y.num_sequences,
        )


def expected_payoff(game: GameInstance, x: SequenceFormVector, y: SequenceFormVector) -> float:
    """x^T A y via sparse triplet accumulation (utility to player 1)."""
    if x.tree is not game.treeplex_x or y.tree is not game.treeplex_y:
        raise TreeplexError("strategy vectors do not belong to this game")
    return float(
        np.dot(game.payoff_vals, x.values[game.payoff_rows] * y.values[game.payoff_cols])
    )


def _power_iteration_norm(game: GameInstance, iters: int = 60, seed: int = 0) -> float:
    """Lower estimate of the operator 2-norm of A."""
    rng = np.random.default_rng(seed)
    v = rng.random(game.treeplex_y.num_sequences) + 1e-9
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = game.payoff_x_gradient(v)
        v = game.payoff_y_gradient(w)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        est = math.sqrt(nv)
        v /= nv
    return est


def _own_sequences(efg: ExtensiveFormGame, player: int) -> dict[str, tuple]:
    """Map each of ``player``'s infosets to the (infoset, action) pairs the
    player took before reaching it; raises on perfect-recall violations."""
    out: dict[str, tuple] = {}
    stack: list[tuple[str, tuple]] = [(efg.root, ())]
    while stack:
        nid, own = stack.pop()
        node = efg.nodes[nid]
        if isinstance(node, TerminalNode):
            continue
        if isinstance(node, ChanceNode):
            for child in node.children:
                stack.append((child, own))
            continue
        if node.owner == player:
            prev = out.setdefault(node.infoset, own)
            if prev != own:
                raise GameFormatError(
                    f"perfect recall violated at infoset {node.infoset!r}"
                )
            for a, child in enumerate(node.children):
                stack.append((child, own + ((node.infoset, a),)))
        else:
            for child in node.children:
                stack.append((child, own))
    return out


def _build_player_treeplex(efg: ExtensiveFormGame, player: int) -> TreePlex:
    """Infosets become decision nodes; infosets sharing the preceding own
    sequence hang as signals under one observation node. A single-action
    dummy root keeps the recursion base uniform and gives every-player
    sequences a mass-1 anchor."""
    own_seq = _own_sequences(efg, player)
    # group infosets by own sequence, preserving first-encounter DFS order
    groups: dict[tuple, list[str]] = {}
    seen: set[str] = set()

    def walk(nid: str):
        node = efg.nodes[nid]
        if isinstance(node, TerminalNode):
            return
        if isinstance(node, PlayerNode) and node.owner == player and node.infoset not in seen:
            seen.add(node.infoset)
            groups.setdefault(own_seq[node.infoset], []).append(node.infoset)
        for child in node.children:
            walk(child)

    walk(efg.root)

    nodes: list[DecisionNode | ObservationNode] = []
    shapes: dict[str, tuple[str, ...]] = {}
    for node in efg.nodes.values():
        if isinstance(node, PlayerNode) and node.owner == player:
            shapes[node.infoset] = node.actions

    def build_decision(infoset: str, prefix: tuple) -> str:
        actions = shapes[infoset]
        children: list[str | None] = []
        for a in range(len(actions)):
            key = prefix + ((infoset, a),)
            kids = groups.get(key, [])
            if kids:
                obs_id = f"{infoset}/{actions[a]}"
                signals = tuple(kids)
                child_ids = tuple(build_decision(k, key) for k in kids)
                nodes.append(ObservationNode(obs_id, signals, child_ids))
                children.append(obs_id)
            else:
                children.append(None)
        nodes.append(DecisionNode(infoset, tuple(actions), tuple(children)))
        return infoset

    top = groups.get((), [])
    if top:
        child_ids = tuple(build_decision(k, ()) for k in top)
        obs_id = f"{ROOT_DECISION}/{ROOT_ACTION}"
        nodes.append(ObservationNode(obs_id, tuple(top), child_ids))
        nodes.append(DecisionNode(ROOT_DECISION, (ROOT_ACTION,), (obs_id,)))
    else:
        nodes.append(DecisionNode(ROOT_DECISION, (ROOT_ACTION,), (None,)))
    return TreePlex(nodes, ROOT_DECISION)


def to_sequence_form_game(
    efg: ExtensiveFormGame, name: str = "game", big_blind: float = 1.0
) -> GameInstance:
    """Build the two-treeplex bilinear saddle-point instance.

    Each terminal contributes one triplet at (player 1's last sequence,
    player 2's last sequence) worth the terminal payoff times the chance
    probabilities on its path.
    """
    efg.validate()
    tx = _build_player_treeplex(efg, 1)
    ty = _build_player_treeplex(efg, 2)

    triplets: dict[tuple[int, int], float] = {}

    def walk(nid: str, sx: int, sy: int, prob: float):
        node = efg.nodes[nid]
        if isinstance(node, TerminalNode):
            if node.payoff != 0.0 and prob != 0.0:
                key = (sx, sy)
                triplets[key] = triplets.get(key, 0.0) + node.payoff * prob
            return
        if isinstance(node, ChanceNode):
            for p, child in zip(node.probs, node.children):
                walk(child, sx, sy, prob * p)
            return
        tree = tx if node.owner == 1 else ty
        for a, child in enumerate(node.children):
            q = tree.sequence_index[(node.infoset, a)]
            if node.owner == 1:
                walk(child, q, sy, prob)
            else:
                walk(child, sx, q, prob)

    root_x = tx.sequence_index[(ROOT_DECISION, 0)]
    root_y = ty.sequence_index[(ROOT_DECISION, 0)]
    walk(efg.root, root_x, root_y, 1.0)

    keys = sorted(triplets)
    rows = np.asarray([k[0] for k in keys], dtype=np.int64)
    cols = np.asarray([k[1] for k in keys], dtype=np.int64)
    vals = np.asarray([triplets[k] for k in keys], dtype=np.float64)

    # certified upper bound: ||A||_2 <= sqrt(||A||_1 * ||A||_inf)
    abs_vals = np.abs(vals)
    col_sums = np.bincount(cols, weights=abs_vals, minlength=ty.num_sequences)
    row_sums = np.bincount(rows, weights=abs_vals, minlength=tx.num_sequences)
    norm1 = float(col_sums.max()) if vals.size else 0.0
    norminf = float(row_sums.max()) if vals.size else 0.0
    payoff_norm = math.sqrt(norm1 * norminf)

    bx = subtree_norm_bounds(tx)[tx.root]
    by = subtree_norm_bounds(ty)[ty.root]
    loss_scale = 1.0 / (3.0 * payoff_norm * bx * by) if payoff_norm > 0 else 1.0

    game = GameInstance(
        name=name,
        treeplex_x=tx,
        treeplex_y=ty,
        payoff_rows=rows,
        payoff_cols=cols,
        payoff_vals=vals,
        payoff_norm=payoff_norm,
        loss_scale=loss_scale,
        big_blind=big_blind,
    )
    if vals.size:
        est = _power_iteration_norm(game)
        if est > payoff_norm * (1.0 + 1e-9):
            raise GameFormatError(
                f"operator norm bound {payoff_norm} below power-iteration estimate {est}"
            )
    return game


# --------------------------------------------------------------------------
# Kuhn poker
# --------------------------------------------------------------------------

_KUHN_CARDS = ("J", "Q", "K")
_KUHN_RANK = {"J": 0, "Q": 1, "K": 2}


def build_kuhn_efg() -> ExtensiveFormGame:
    """Three-card Kuhn poker; antes of 1, bets of 1, six deals at 1/6 each."""
    nodes: dict[str, EfgNode] = {}

    def terminal(nid: str, payoff: float) -> str:
        nodes[nid] = TerminalNode(nid, payoff)
        return nid

    def showdown(nid: str, c1: str, c2: str, stake: int) -> str:
        win = 1.0 if _KUHN_RANK[c1] > _KUHN_RANK[c2] else -1.0
        return terminal(nid, win * stake)

    deals = [(c1, c2) for c1 in _KUHN_CARDS for c2 in _KUHN_CARDS if c1 != c2]
    deal_children = []
    for c1, c2 in deals:
        d = f"{c1}{c2}"
        # P1 round-one node: check or raise
        p1 = f"n{d}"
        p2c = f"n{d}c"  # after P1 checks
        p2r = f"n{d}r"  # after P1 raises
        p1cr = f"n{d}cr"  # after check, raise
        nodes[p1] = PlayerNode(p1, 1, f"1:{c1}", ("check", "raise"), (p2c, p2r))
        nodes[p2c] = PlayerNode(
            p2c, 2, f"2:{c2}:c", ("check", "raise"),
            (showdown(f"t{d}cc", c1, c2, 1), p1cr),
        )
        nodes[p2r] = PlayerNode(
            p2r, 2, f"2:{c2}:r", ("fold", "call"),
            (terminal(f"t{d}rf", 1.0), showdown(f"t{d}rc", c1, c2, 2)),
        )
        nodes[p1cr] = PlayerNode(
            p1cr, 1, f"1:{c1}:cr", ("fold", "call"),
            (terminal(f"t{d}crf", -1.0), showdown(f"t{d}crc", c1, c2, 2)),
        )
        deal_children.append(p1)
    nodes["deal"] = ChanceNode(
        "deal", tuple(1.0 / len(deals) for _ in deals), tuple(deal_children)
    )
    return ExtensiveFormGame(nodes, "deal")


def build_kuhn() -> GameInstance:
    return to_sequence_form_game(build_kuhn_efg(), name="kuhn")


# --------------------------------------------------------------------------
# Leduc poker
# --------------------------------------------------------------------------

_LEDUC_CARDS = tuple(f"{r}{s}" for r in "JQK" for s in "ab")  # 3 ranks x 2 suits
_LEDUC_RANK = {"J": 0, "Q": 1, "K": 2}


_LEDUC_ACTING = {
    "": (1, ("check", "bet")),
    "c": (2, ("check", "bet")),
    "b": (2, ("fold", "call", "raise")),
    "cb": (1, ("fold", "call", "raise")),
    "br": (1, ("fold", "call")),
    "cbr": (2, ("fold", "call")),
}
_LEDUC_STEP = {
    ("", "check"): "c",
    ("", "bet"): "b",
    ("c", "check"): "cc",
    ("c", "bet"): "cb",
    ("b", "call"): "bk",
    ("b", "raise"): "br",
    ("cb", "call"): "cbk",
    ("cb", "raise"): "cbr",
    ("br", "call"): "brk",
    ("cbr", "call"): "cbrk",
}


def _leduc_commit(history: str, bet: int) -> tuple[int, int]:
    """Chips (beyond antes) each player has put in after one round's history."""
    paid = {1: 0, 2: 0}
    level = 0
    h = ""
    for i in range(len(history)):
        nxt = history[: i + 1]
        actor, actions = _LEDUC_ACTING[h]
        for action in actions:
            if _LEDUC_STEP.get((h, action)) == nxt:
                break
        else:  # pragma: no cover - grammar is closed
            raise AssertionError(f"unreachable history {history!r}")
        if action in ("bet", "raise"):
            level += 1
            paid[actor] = level * bet
        elif action == "call":
            paid[actor] = level * bet
        h = nxt
    return paid[1], paid[2]


def build_leduc_efg() -> ExtensiveFormGame:
    """Two-round Leduc hold'em on a six-card deck (3 ranks x 2 suits).

    Ante 1 each; round one uses a fixed bet of 2, round two (after one public
    card) a fixed bet of 4, at most two bets per round. Pair beats rank;
    equal ranks split the pot.
    """
    nodes: dict[str, EfgNode] = {}

    def showdown_value(c1: str, c2: str, pub: str, pot: int) -> float:
        r1, r2, rp = _LEDUC_RANK[c1[0]], _LEDUC_RANK[c2[0]], _LEDUC_RANK[pub[0]]
        if r1 == rp and r2 != rp:
            return float(pot)
        if r2 == rp and r1 != rp:
            return float(-pot)
        if r1 > r2:
            return float(pot)
        if r2 > r1:
            return float(-pot)
        return 0.0

    counter = 0

    def fresh(prefix: str) -> str:
        nonlocal counter
        counter += 1
        return f"{prefix}{counter}"

    def round_two(c1: str, c2: str, pub: str, pot1: int, tag: str) -> str:
        def rec(h: str) -> str:
            actor, actions = _LEDUC_ACTING[h]
            children = []
            for action in actions:
                if action == "fold":
                    p1_bet, p2_bet = _leduc_commit(h, 4)
                    lose = pot1 + 1 + (p1_bet if actor == 1 else p2_bet)
                    sign = -1.0 if actor == 1 else 1.0
                    tid = fresh("t")
                    nodes[tid] = TerminalNode(tid, sign * lose)
                    children.append(tid)
                    continue
                nxt = _LEDUC_STEP[(h, action)]
                if nxt in _LEDUC_ACTING:
                    children.append(rec(nxt))
                else:
                    p1_bet, _ = _leduc_commit(nxt, 4)
                    pot = pot1 + 1 + p1_bet  # both matched
                    tid = fresh("t")
                    nodes[tid] = TerminalNode(tid, showdown_value(c1, c2, pub, pot))
                    children.append(tid)
            nid = fresh("n")
            card = c1 if actor == 1 else c2
            info = f"{actor}:{card}:{tag}:{pub}:{h}"
            nodes[nid] = PlayerNode(nid, actor, info, actions, tuple(children))
            return nid

        return rec("")

    def public_chance(c1: str, c2: str, pot1: int, tag: str) -> str:
        remaining = [c for c in _LEDUC_CARDS if c not in (c1, c2)]
        children = tuple(round_two(c1, c2, pub, pot1, tag) for pub in remaining)
        nid = fresh("ch")
        nodes[nid] = ChanceNode(nid, tuple(1.0 / len(remaining) for _ in remaining), children)
        return nid

    def round_one(c1: str, c2: str) -> str:
        def rec(h: str) -> str:
            actor, actions = _LEDUC_ACTING[h]
            children = []
            for action in actions:
                if action == "fold":
                    p1_bet, p2_bet = _leduc_commit(h, 2)
                    lose = 1 + (p1_bet if actor == 1 else p2_bet)
                    sign = -1.0 if actor == 1 else 1.0
                    tid = fresh("t")
                    nodes[tid] = TerminalNode(tid, sign * lose)
                    children.append(tid)
                    continue
                nxt = _LEDUC_STEP[(h, action)]
                if nxt in _LEDUC_ACTING:
                    children.append(rec(nxt))
                else:
                    p1_bet, _ = _leduc_commit(nxt, 2)
                    children.append(public_chance(c1, c2, p1_bet, nxt))
            nid = fresh("n")
            card = c1 if actor == 1 else c2
            info = f"{actor}:{card}:r1:{h}"
            nodes[nid] = PlayerNode(nid, actor, info, actions, tuple(children))
            return nid

        return rec("")

    deals = [(c1, c2) for c1 in _LEDUC_CARDS for c2 in _LEDUC_CARDS if c1 != c2]
    children = tuple(round_one(c1, c2) for c1, c2 in deals)
    nodes["deal"] = ChanceNode("deal", tuple(1.0 / len(deals) for _ in deals), children)
    return ExtensiveFormGame(nodes, "deal")


def build_leduc() -> GameInstance:
    return to_sequence_form_game(build_leduc_efg(), name="leduc")


# --------------------------------------------------------------------------
# Seeded random games
# --------------------------------------------------------------------------


def _random_level_plan(depth: int) -> list[str]:
    """Rounds of chance, player 1, player 2 levels."""
    plan: list[str] = []
    for _ in range(depth):
        plan.extend(["chance", "p1", "p2"])
    return plan


def _random_sequence_count(depth: int, branching: int) -> int:
    """Per-player sequence count of the random game, for the size guard."""
    total = 0
    for player in (1, 2):
        n_seq = 1  # dummy root sequence
        chance_seen = 0
        own_moves = 0
        for level in _random_level_plan(depth):
            if level == "chance":
                chance_seen += 1
            elif (level == "p1" and player == 1) or (level == "p2" and player == 2):
                infosets = branching**chance_seen * branching**own_moves
                n_seq += infosets * branching
                own_moves += 1
        total = max(total, n_seq)
    return total


def build_random_efg(seed: int, depth: int, branching: int) -> ExtensiveFormGame:
    """Alternating chance / player-1 / player-2 levels, ``depth`` rounds.

    Players observe the chance outcomes and their own actions but not the
    opponent's moves. Chance probabilities and terminal payoffs (uniform in
    [-1, 1]) are drawn from the seeded generator; identical seeds give
    bit-identical games.
    """
    if depth < 1 or branching < 1:
        raise ValueError("depth and branching must be at least 1")
    n_seq = _random_sequence_count(depth, branching)
    if n_seq > SIZE_GUARD_SEQUENCES:
        raise SizeGuardError(
            f"random game would have about {n_seq} sequences per player "
            f"(guard: {SIZE_GUARD_SEQUENCES})"
        )
    rng = np.random.default_rng(seed)
    plan = _random_level_plan(depth)
    nodes: dict[str, EfgNode] = {}
    counter = 0

    def fresh(prefix: str) -> str:
        nonlocal counter
        counter += 1
        return f"{prefix}{counter}"

    actions = tuple(f"a{i}" for i in range(branching))

    def rec(level: int, own1: tuple, own2: tuple, pub: tuple) -> str:
        if level == len(plan):
            tid = fresh("t")
            nodes[tid] = TerminalNode(tid, float(rng.uniform(-1.0, 1.0)))
            return tid
        kind = plan[level]
        if kind == "chance":
            w = rng.random(branching) + 1e-3
            probs = w / w.sum()
            children = tuple(
                rec(level + 1, own1, own2, pub + (i,)) for i in range(branching)
            )
            nid = fresh("c")
            nodes[nid] = ChanceNode(nid, tuple(float(p) for p in probs), children)
            return nid
        owner = 1 if kind == "p1" else 2
        own = own1 if owner == 1 else own2
        info = f"{owner}:L{level}:o{'.'.join(map(str, own))}:c{'.'.join(map(str, pub))}"
        children = []
        for i in range(branching):
            if owner == 1:
                children.append(rec(level + 1, own1 + (i,), own2, pub))
            else:
                children.append(rec(level + 1, own1, own2 + (i,), pub))
        nid = fresh("n")
        nodes[nid] = PlayerNode(nid, owner, info, actions, tuple(children))
        return nid

    root = rec(0, (), (), ())
    return ExtensiveFormGame(nodes, root)


def build_random_game(seed: int, depth: int, branching: int) -> GameInstance:
    efg = build_random_efg(seed, depth, branching)
    return to_sequence_form_game(efg, name=f"random-s{seed}-d{depth}-b{branching}")
