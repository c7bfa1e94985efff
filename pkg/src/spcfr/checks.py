"""Self-contained invariant suites behind the ``spcfr check`` verb.

Each suite is a condensed, deterministic version of the corresponding test
module, runnable without pytest or any plotting component installed.
"""

from __future__ import annotations

import numpy as np

from . import cfr, games, local_rm, metrics
from .treeplex import (
    SequenceFormVector,
    random_behavioral,
    slice_down,
    subtree_norm_bounds,
    to_behavioral,
    to_sequence_form,
)


def _check_treeplex() -> list[str]:
    problems = []
    rng = np.random.default_rng(7)
    game = games.build_kuhn()
    for tree in (game.treeplex_x, game.treeplex_y):
        bounds = subtree_norm_bounds(tree)
        for trial in range(50):
            b = random_behavioral(tree, rng)
            v = to_sequence_form(tree, b)
            try:
                v.validate_strategy()
            except Exception as exc:  # noqa: BLE001
                problems.append(f"flow conservation: {exc}")
                break
            for nid in tree.nodes:
                if np.linalg.norm(slice_down(v, nid)) > bounds[nid] + 1e-9:
                    problems.append(f"norm bound violated at {nid}")
            rt = to_sequence_form(tree, to_behavioral(tree, v))
            if np.max(np.abs(rt.values - v.values)) > 1e-9:
                problems.append("round trip drifted")
    return problems


def _check_local_rm() -> list[str]:
    problems = []
    rng = np.random.default_rng(11)
    for reg in (local_rm.ENTROPY, local_rm.EUCLIDEAN):
        for n in (2, 3, 10):
            eta = 0.3
            for _ in range(200):
                a = rng.normal(size=n)
                b = a + rng.normal(scale=0.5, size=n)
                xa = local_rm.argmin_reg(a, eta, reg)
                xb = local_rm.argmin_reg(b, eta, reg)
                lhs = reg.primal_norm(xa - xb)
                rhs = eta * reg.dual_norm(a - b)
                if lhs > rhs + 1e-9:
                    problems.append(f"Lipschitz bound broken ({reg.kind}, n={n})")
                    break
    # stability + regret bound on one random stream
    n, eta, T = 5, 0.2, 300
    for reg in (local_rm.ENTROPY, local_rm.EUCLIDEAN):
        m = local_rm.OftrlMinimizer(n, eta, reg)
        losses, preds, decisions = [], [], []
        prev = None
        last_loss = np.zeros(n)
        for t in range(T):
            pred = last_loss
            x = m.next_decision(pred)
            loss = rng.uniform(-1 / 3, 1 / 3, size=n)
            m.observe_loss(loss)
            losses.append(loss)
            preds.append(pred)
            decisions.append(x)
            if prev is not None:
                delta = max(reg.dual_norm(v) for v in losses + preds)
                if reg.primal_norm(x - prev) > 3 * eta * delta + 1e-12:
                    problems.append(f"stability bound broken ({reg.kind})")
            prev = x
            last_loss = loss
        regret = local_rm.cumulative_regret(decisions, losses)
        bound = local_rm.theorem_bound(reg, eta, losses, preds)
        if regret > bound + 1e-9:
            problems.append(f"regret bound broken ({reg.kind})")
    return problems


def _check_schedule() -> list[str]:
    from fractions import Fraction

    problems = []
    game = games.build_random_game(3, 2, 2)
    for tree in (game.treeplex_x, game.treeplex_y):
        sched = cfr.assign_stability(tree, 0.5)
        for nid, node in tree.nodes.items():
            if nid == tree.root:
                if abs(sched.gamma[nid] - 0.5) > 1e-15:
                    problems.append("root gamma is not kappa_star")
                continue
            parent = _parent_of(tree, nid)
            pnode = tree.nodes[parent]
            ratio_sq = Fraction(sched.gamma[nid] ** 2 / sched.gamma[parent] ** 2).limit_denominator(10**9)
            if hasattr(pnode, "actions"):
                expected = Fraction(1, 4 * len(pnode.actions))
            else:
                expected = Fraction(1, len(pnode.signals))
            if ratio_sq != expected:
                problems.append(f"gamma ratio wrong at {nid}: {ratio_sq} != {expected}")
    return problems


def _parent_of(tree, nid):
    for pid, node in tree.nodes.items():
        if nid in [k for k in node.children if k is not None]:
            return pid
    raise KeyError(nid)


def _check_solver() -> list[str]:
    problems = []
    game = games.build_kuhn()
    opts = cfr.SolveOptions(algorithm="oftrl_theory", regularizer="euclidean", record_every=16)
    trace = cfr.run_simultaneous(game, 256, opts)
    for row in trace.rows:
        # folk theorem: T * residual <= summed root regrets
        if row.t * row.residual > row.regret_x + row.regret_y + 1e-9:
            problems.append(f"folk theorem broken at t={row.t}")
        if row.residual < -1e-9:
            problems.append(f"negative residual at t={row.t}")
    if trace.rows[-1].max_stability_violation > 1e-9:
        problems.append("stability schedule violated")
    x, y = cfr.average_strategies(trace)
    x.validate_strategy()
    y.validate_strategy()
    recomputed = metrics.saddle_residual(game, x, y)
    if abs(recomputed - trace.rows[-1].residual) > 1e-10:
        problems.append("residual of averages does not recompute")
    return problems


def _check_determinism() -> list[str]:
    from .cli import RunConfig, run
    import tempfile
    from pathlib import Path

    problems = []
    with tempfile.TemporaryDirectory() as tmp:
        paths = [Path(tmp) / "a.csv", Path(tmp) / "b.csv"]
        for p in paths:
            cfg = RunConfig(game="random", seed=5, depth=2, branching=2,
                            iterations=64, output=str(p))
            run(cfg)
        if paths[0].read_bytes() != paths[1].read_bytes():
            problems.append("identical configs produced different CSVs")
    return problems


_SUITES = {
    "treeplex": _check_treeplex,
    "local-rm": _check_local_rm,
    "schedule": _check_schedule,
    "solver": _check_solver,
    "determinism": _check_determinism,
}


def run_all(verbose: bool = True) -> int:
    failed = 0
    for name, suite in _SUITES.items():
        problems = suite()
        status = "ok" if not problems else "FAIL"
        if verbose:
            print(f"check {name}: {status}")
            for p in problems:
                print(f"  - {p}")
        failed += bool(problems)
    return 1 if failed else 0
