"""Sequential decision processes (treeplexes) and sequence-form strategies.

A treeplex is a tree of decision nodes (where the agent picks a point on a
probability simplex over actions) and observation nodes (where the
environment emits one of several signals). Strategies live either in
behavioral form (one simplex point per decision node) or in sequence form
(one entry per (decision node, action) pair, equal to the product of action
probabilities on the path from the root).

Sequence indices are assigned in depth-first pre-order with actions in
declared order, so the entries at or below any decision node form a
contiguous range and slicing is O(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class TreeplexError(ValueError):
    """Structural problem with a treeplex or a vector attached to one."""


@dataclass(frozen=True)
class DecisionNode:
    """Agent decision point. ``children[i]`` is the observation node reached
    by playing ``actions[i]``, or None when nothing follows that action."""

    id: str
    actions: tuple[str, ...]
    children: tuple[str | None, ...]

    def __post_init__(self):
        if len(self.actions) < 1:
            raise TreeplexError(f"decision node {self.id!r} has no actions")
        if len(self.children) != len(self.actions):
            raise TreeplexError(f"decision node {self.id!r}: children/actions mismatch")


@dataclass(frozen=True)
class ObservationNode:
    """Environment signal point. Every signal leads to a decision node."""

    id: str
    signals: tuple[str, ...]
    children: tuple[str, ...]

    def __post_init__(self):
        if len(self.signals) < 1:
            raise TreeplexError(f"observation node {self.id!r} has no signals")
        if len(self.children) != len(self.signals):
            raise TreeplexError(f"observation node {self.id!r}: children/signals mismatch")


class TreePlex:
    """Immutable sequential decision process with a decision-node root.

    Construction validates tree-ness (every node except the root has exactly
    one parent, no cycles, no orphans) and builds the sequence index plus the
    flat integer arrays used by the numeric kernels:

    - ``seq_start[d]``, ``n_actions[d]``: contiguous action range of decision
      node ``d`` (decision nodes numbered in pre-order),
    - ``subtree_end[d]``: end of the contiguous index range at or below ``d``,
    - ``parent_seq[d]``: sequence index preceding ``d`` (-1 for the root),
    - ``child_ptr``/``child_idx``: CSR map from a sequence to the decision
      nodes hanging under it (through the observation node, if any).
    """

    def __init__(self, nodes: list[DecisionNode | ObservationNode], root: str):
        self.nodes: dict[str, DecisionNode | ObservationNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise TreeplexError(f"duplicate node id {node.id!r}")
            self.nodes[node.id] = node
        if root not in self.nodes:
            raise TreeplexError(f"unknown root {root!r}")
        if not isinstance(self.nodes[root], DecisionNode):
            raise TreeplexError("treeplex root must be a decision node")
        self.root = root
        self._validate_tree()
        self._build_index()

    # -- construction ------------------------------------------------------

    def _validate_tree(self):
        seen: set[str] = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise TreeplexError(f"node {nid!r} has more than one parent (or a cycle)")
            seen.add(nid)
            node = self.nodes[nid]
            if isinstance(node, DecisionNode):
                for child in node.children:
                    if child is None:
                        continue
                    if child not in self.nodes:
                        raise TreeplexError(f"decision node {nid!r} references unknown child {child!r}")
                    if not isinstance(self.nodes[child], ObservationNode):
                        raise TreeplexError(f"decision node {nid!r} must point at observation nodes")
                    stack.append(child)
            else:
                for child in node.children:
                    if child not in self.nodes:
                        raise TreeplexError(f"observation node {nid!r} references unknown child {child!r}")
                    if not isinstance(self.nodes[child], DecisionNode):
                        raise TreeplexError(f"observation node {nid!r} must point at decision nodes")
                    stack.append(child)
        if seen != set(self.nodes):
            orphans = sorted(set(self.nodes) - seen)
            raise TreeplexError(f"nodes unreachable from root: {orphans}")

    def _build_index(self):
        self.decision_ids: list[str] = []
        self.decision_index: dict[str, int] = {}
        self.sequence_index: dict[tuple[str, int], int] = {}
        self.parent_sequence: dict[str, int | None] = {}
        seq_start: list[int] = []
        n_actions: list[int] = []
        subtree_end: list[int] = []
        parent_seq: list[int] = []
        seq_labels: list[tuple[str, str]] = []
        # observation metadata: id -> (parent sequence index, contiguous range)
        self._obs_parent_seq: dict[str, int] = {}
        self._obs_range: dict[str, tuple[int, int]] = {}

        counter = 0

        def visit_decision(nid: str, pseq: int | None):
            nonlocal counter
            node = self.nodes[nid]
            d = len(self.decision_ids)
            self.decision_ids.append(nid)
            self.decision_index[nid] = d
            self.parent_sequence[nid] = pseq
            start = counter
            seq_start.append(start)
            n_actions.append(len(node.actions))
            parent_seq.append(-1 if pseq is None else pseq)
            subtree_end.append(-1)  # patched after recursion
            for a, label in enumerate(node.actions):
                self.sequence_index[(nid, a)] = counter
                seq_labels.append((nid, label))
                counter += 1
            for a, obs in enumerate(node.children):
                if obs is None:
                    continue
                q = start + a
                self._obs_parent_seq[obs] = q
                self.parent_sequence[obs] = q
                obs_start = counter
                for dec in self.nodes[obs].children:
                    visit_decision(dec, q)
                self._obs_range[obs] = (obs_start, counter)
            subtree_end[d] = counter

        visit_decision(self.root, None)

        self.num_sequences = counter
        self.seq_labels = seq_labels
        self.seq_start = np.asarray(seq_start, dtype=np.int64)
        self.n_actions = np.asarray(n_actions, dtype=np.int64)
        self.subtree_end = np.asarray(subtree_end, dtype=np.int64)
        self.parent_seq = np.asarray(parent_seq, dtype=np.int64)

        children_by_seq: list[list[int]] = [[] for _ in range(counter)]
        for d, nid in enumerate(self.decision_ids):
            p = self.parent_seq[d]
            if p >= 0:
                children_by_seq[p].append(d)
        ptr = np.zeros(counter + 1, dtype=np.int64)
        idx: list[int] = []
        for q in range(counter):
            idx.extend(children_by_seq[q])
            ptr[q + 1] = len(idx)
        self.child_ptr = ptr
        self.child_idx = np.asarray(idx, dtype=np.int64)

    # -- queries -----------------------------------------------------------

    @property
    def num_decision_nodes(self) -> int:
        return len(self.decision_ids)

    def is_decision(self, node_id: str) -> bool:
        return isinstance(self.nodes[node_id], DecisionNode)

    def subtree_range(self, node_id: str) -> tuple[int, int]:
        """Contiguous sequence-index range at or below ``node_id``."""
        if node_id not in self.nodes:
            raise TreeplexError(f"unknown node {node_id!r}")
        if self.is_decision(node_id):
            d = self.decision_index[node_id]
            return int(self.seq_start[d]), int(self.subtree_end[d])
        return self._obs_range[node_id]

    def action_range(self, node_id: str) -> tuple[int, int]:
        """Sequence-index range covering exactly the actions of a decision node."""
        d = self.decision_index[node_id]
        s = int(self.seq_start[d])
        return s, s + int(self.n_actions[d])

    def observation_parent_seq(self, obs_id: str) -> int:
        return self._obs_parent_seq[obs_id]

    def decision_children_of_seq(self, q: int) -> list[int]:
        return [int(d) for d in self.child_idx[self.child_ptr[q] : self.child_ptr[q + 1]]]


@dataclass
class BehavioralStrategy:
    """One simplex point per decision node, keyed by node id."""

    tree: TreePlex
    probs: dict[str, np.ndarray]

    def validate(self, tol: float = 1e-9):
        if set(self.probs) != set(self.tree.decision_ids):
            raise TreeplexError("behavioral strategy does not cover the decision nodes")
        for nid, p in self.probs.items():
            node = self.tree.nodes[nid]
            if p.shape != (len(node.actions),):
                raise TreeplexError(f"probability vector at {nid!r} has wrong dimension")
            if np.any(p < -tol) or abs(float(p.sum()) - 1.0) > tol:
                raise TreeplexError(f"probabilities at {nid!r} are not a simplex point")

    def as_flat(self) -> np.ndarray:
        """Sequence-indexed array holding the behavioral probabilities."""
        flat = np.zeros(self.tree.num_sequences)
        for nid, p in self.probs.items():
            s, e = self.tree.action_range(nid)
            flat[s:e] = p
        return flat


def uniform_behavioral(tree: TreePlex) -> BehavioralStrategy:
    probs = {
        nid: np.full(len(tree.nodes[nid].actions), 1.0 / len(tree.nodes[nid].actions))
        for nid in tree.decision_ids
    }
    return BehavioralStrategy(tree, probs)


def random_behavioral(tree: TreePlex, rng: np.random.Generator) -> BehavioralStrategy:
    probs = {}
    for nid in tree.decision_ids:
        n = len(tree.nodes[nid].actions)
        w = rng.random(n) + 1e-12
        probs[nid] = w / w.sum()
    return BehavioralStrategy(tree, probs)


@dataclass
class SequenceFormVector:
    """Dense vector with one entry per sequence.

    ``kind`` is one of ``strategy``, ``loss``, ``prediction``. Only strategy
    vectors carry the non-negativity and flow-conservation invariants.
    """

    tree: TreePlex
    values: np.ndarray
    kind: str = "strategy"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.tree.num_sequences,):
            raise TreeplexError(
                f"vector length {self.values.shape} does not match "
                f"{self.tree.num_sequences} sequences"
            )

    def validate_strategy(self, tol: float = 1e-9):
        if self.kind != "strategy":
            raise TreeplexError("only strategy-kind vectors carry flow invariants")
        if np.any(self.values < -tol):
            raise TreeplexError("strategy vector has negative entries")
        res = flow_residuals(self.tree, self.values)
        worst = float(np.max(np.abs(res))) if res.size else 0.0
        if worst > tol:
            raise TreeplexError(f"flow conservation violated by {worst:.3e}")


def flow_residuals(tree: TreePlex, values: np.ndarray) -> np.ndarray:
    """Per decision node: sum of own entries minus the parent-sequence mass."""
    out = np.empty(tree.num_decision_nodes)
    for d in range(tree.num_decision_nodes):
        s = tree.seq_start[d]
        n = tree.n_actions[d]
        p = tree.parent_seq[d]
        mass = 1.0 if p < 0 else values[p]
        out[d] = values[s : s + n].sum() - mass
    return out


def to_sequence_form(tree: TreePlex, b: BehavioralStrategy) -> SequenceFormVector:
    """Each entry becomes the product of action probabilities on its path."""
    if b.tree is not tree:
        raise TreeplexError("behavioral strategy built for a different treeplex")
    b.validate()
    flat = b.as_flat()
    out = np.empty(tree.num_sequences)
    for d in range(tree.num_decision_nodes):
        s = tree.seq_start[d]
        n = tree.n_actions[d]
        p = tree.parent_seq[d]
        mass = 1.0 if p < 0 else out[p]
        out[s : s + n] = flat[s : s + n] * mass
    return SequenceFormVector(tree, out, kind="strategy")


def to_behavioral(tree: TreePlex, v: SequenceFormVector) -> BehavioralStrategy:
    """Divide each entry by its parent-sequence mass.

    Decision nodes whose parent sequence has zero mass get the uniform
    distribution (any simplex point is valid there; uniform is deterministic).
    """
    if v.tree is not tree:
        raise TreeplexError("vector built for a different treeplex")
    probs = {}
    for d, nid in enumerate(tree.decision_ids):
        s = tree.seq_start[d]
        n = tree.n_actions[d]
        p = tree.parent_seq[d]
        mass = 1.0 if p < 0 else float(v.values[p])
        if mass > 0.0:
            probs[nid] = v.values[s : s + n] / mass
        else:
            probs[nid] = np.full(n, 1.0 / n)
    return BehavioralStrategy(tree, probs)


def slice_down(v: SequenceFormVector, node_id: str) -> np.ndarray:
    """Entries for all (j', a') at or below ``node_id``, in sequence order."""
    start, end = v.tree.subtree_range(node_id)
    return v.values[start:end].copy()


def subtree_norm_bounds(tree: TreePlex) -> dict[str, float]:
    """Upper bound on the 2-norm of any sequence-form vector in each subtree.

    Observation nodes combine children in quadrature; a decision node adds one
    unit of mass for its own simplex and takes the worst child block.
    """
    bounds: dict[str, float] = {}

    def visit(nid: str) -> float:
        node = tree.nodes[nid]
        if isinstance(node, DecisionNode):
            worst = 0.0
            for obs in node.children:
                if obs is not None:
                    worst = max(worst, visit(obs))
            b = math.sqrt(1.0 + worst * worst)
        else:
            total = 0.0
            for dec in node.children:
                child = visit(dec)
                total += child * child
            b = math.sqrt(total)
        bounds[nid] = b
        return b

    visit(tree.root)
    return bounds
