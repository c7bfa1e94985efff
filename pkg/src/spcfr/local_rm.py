"""Predictive regret minimizers over a single simplex.

The engine is optimistic follow-the-regularized-leader with a pluggable
regularizer; vanilla regret matching is kept as the baseline. Both follow
the same protocol: ``next_decision(prediction)`` strictly alternates with
``observe_loss(loss)``, starting with a decision.

Regularizer norm pairs: entropy is 1-strongly convex w.r.t. the l1 norm so
its prediction errors are measured in l-infinity; the euclidean regularizer
pairs l2 with itself. The theory-checking solver configuration uses the
euclidean pairing so the 2-norm stability bounds hold without norm-equivalence
constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class Regularizer:
    """Strongly convex regularizer on the simplex with its norm pairing."""

    kind: str  # "entropy" | "euclidean"

    def diameter(self, n: int) -> float:
        """Range of the regularizer over the n-simplex."""
        if self.kind == "entropy":
            return math.log(n) if n > 1 else 0.0
        return 0.5 * (1.0 - 1.0 / n)

    def primal_norm(self, v: np.ndarray) -> float:
        if self.kind == "entropy":
            return float(np.abs(v).sum())
        return float(np.linalg.norm(v))

    def dual_norm(self, v: np.ndarray) -> float:
        if self.kind == "entropy":
            return float(np.abs(v).max()) if v.size else 0.0
        return float(np.linalg.norm(v))


ENTROPY = Regularizer("entropy")
EUCLIDEAN = Regularizer("euclidean")

_REG_BY_NAME = {"entropy": ENTROPY, "euclidean": EUCLIDEAN}


def get_regularizer(name: str) -> Regularizer:
    try:
        return _REG_BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown regularizer {name!r}") from None


def argmin_reg(loss: np.ndarray, eta: float, reg: Regularizer) -> np.ndarray:
    """argmin over the simplex of <x, loss> + R(x)/eta.

    Entropy has the closed form x_i proportional to exp(-eta * loss_i),
    computed with max subtraction; the euclidean case is the exact sort-based
    projection of -eta * loss onto the simplex.
    """
    loss = np.asarray(loss, dtype=np.float64)
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    if not np.all(np.isfinite(loss)):
        raise ValueError("loss vector has non-finite entries")
    if reg.kind == "entropy":
        return kernels.argmin_entropy(loss, eta)
    return kernels.argmin_euclidean(loss, eta)


class _AlternationMixin:
    _awaiting = "decision"

    def _expect(self, phase: str):
        if self._awaiting != phase:
            if phase == "decision":
                raise RuntimeError("observe_loss called before any pending decision")
            raise RuntimeError("next_decision called twice without observe_loss")


class OftrlMinimizer(_AlternationMixin):
    """Optimistic FTRL over the n-simplex.

    Decision at time t is argmin_x <x, L^{t-1} + m^t> + R(x)/eta where
    L^{t-1} is the cumulative observed loss. Predictions and losses are
    expected to have dual norm at most 1/3 after game-level scaling; the
    first prediction defaults to zero.
    """

    def __init__(self, n: int, eta: float, regularizer: Regularizer = ENTROPY):
        if n < 1:
            raise ValueError("dimension must be at least 1")
        if eta <= 0.0:
            raise ValueError("eta must be positive")
        self.n = n
        self.eta = eta
        self.regularizer = regularizer
        self.cumulative_loss = np.zeros(n)
        self.last_prediction = np.zeros(n)
        self.last_decision: np.ndarray | None = None
        self.t = 0

    def next_decision(self, prediction: np.ndarray | None = None) -> np.ndarray:
        self._expect("decision")
        m = np.zeros(self.n) if prediction is None else np.asarray(prediction, dtype=np.float64)
        if m.shape != (self.n,):
            raise ValueError("prediction dimension mismatch")
        x = argmin_reg(self.cumulative_loss + m, self.eta, self.regularizer)
        self.last_prediction = m
        self.last_decision = x
        self._awaiting = "loss"
        return x

    def observe_loss(self, loss: np.ndarray):
        self._expect("loss")
        loss = np.asarray(loss, dtype=np.float64)
        if loss.shape != (self.n,):
            raise ValueError("loss dimension mismatch")
        self.cumulative_loss += loss
        self.t += 1
        self._awaiting = "decision"


class RegretMatchingMinimizer(_AlternationMixin):
    """Vanilla regret matching: play proportionally to positive cumulative
    regrets; uniform when none are positive. Ignores predictions."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be at least 1")
        self.n = n
        self.cumulative_regret = np.zeros(n)
        self.last_decision: np.ndarray | None = None
        self.t = 0

    def next_decision(self, prediction: np.ndarray | None = None) -> np.ndarray:
        self._expect("decision")
        pos = np.maximum(self.cumulative_regret, 0.0)
        total = pos.sum()
        x = pos / total if total > 0.0 else np.full(self.n, 1.0 / self.n)
        self.last_decision = x
        self._awaiting = "loss"
        return x

    def observe_loss(self, loss: np.ndarray):
        self._expect("loss")
        loss = np.asarray(loss, dtype=np.float64)
        if loss.shape != (self.n,):
            raise ValueError("loss dimension mismatch")
        played = float(loss @ self.last_decision)
        self.cumulative_regret += played - loss
        self.t += 1
        self._awaiting = "decision"


def cumulative_regret(decisions, losses) -> float:
    """Regret of a decision sequence against the best fixed action."""
    decisions = list(decisions)
    losses = list(losses)
    if len(decisions) != len(losses):
        raise ValueError("decisions and losses must have equal length")
    if not losses:
        return 0.0
    played = sum(float(np.dot(l, x)) for l, x in zip(losses, decisions))
    total = np.sum(np.asarray(losses, dtype=np.float64), axis=0)
    return played - float(total.min())


def theorem_bound(
    reg: Regularizer, eta: float, losses, predictions
) -> float:
    """Right-hand side of the stable-predictive regret bound:
    diameter/eta + 3 * Delta_ell * eta * sum of squared prediction errors."""
    losses = [np.asarray(l, dtype=np.float64) for l in losses]
    predictions = [np.asarray(m, dtype=np.float64) for m in predictions]
    n = losses[0].size
    delta_ell = 0.0
    for v in losses + predictions:
        delta_ell = max(delta_ell, reg.dual_norm(v))
    err = sum(reg.dual_norm(l - m) ** 2 for l, m in zip(losses, predictions))
    return reg.diameter(n) / eta + 3.0 * delta_ell * eta * err
