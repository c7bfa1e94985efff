import numpy as np
import pytest

from helpers import dense_payoff, lp_solve_game
from spcfr import metrics
from spcfr.cfr import SolveOptions, make_minimizers, run_simultaneous
from spcfr.games import GameInstance, build_random_game
from spcfr.metrics import (
    SolveTrace,
    TraceRow,
    best_response_value,
    brute_force_regret,
    count_subtree_vertices,
    enumerate_subtree_vertices,
    fit_convergence_rate,
    min_over_subtree_vertices,
    residual_to_mbbg,
    saddle_residual,
)
from spcfr.treeplex import SequenceFormVector, random_behavioral, to_sequence_form, uniform_behavioral


def _strategy(tree, rng=None):
    b = uniform_behavioral(tree) if rng is None else random_behavioral(tree, rng)
    return to_sequence_form(tree, b)


def test_best_response_matches_vertex_enumeration(rng):
    game = build_random_game(1, 1, 2)  # few pure strategies per player
    assert count_subtree_vertices(game.treeplex_x, game.treeplex_x.root) <= 12
    y = _strategy(game.treeplex_y, rng)
    value, br = best_response_value(game, "x", y)
    A = dense_payoff(game)
    vertices = enumerate_subtree_vertices(game.treeplex_x, game.treeplex_x.root)
    best = (vertices @ (A @ y.values)).max()
    assert value == pytest.approx(best, abs=1e-12)
    assert float(br.values @ (A @ y.values)) == pytest.approx(best, abs=1e-12)


def test_best_response_dominated_pure_strategy():
    game = build_random_game(2, 1, 2)
    efg_vertices = enumerate_subtree_vertices(game.treeplex_y, game.treeplex_y.root)
    A = dense_payoff(game)
    # opponent fixes an arbitrary pure strategy; BR value is the row optimum
    y = SequenceFormVector(game.treeplex_y, efg_vertices[0])
    value, _ = best_response_value(game, "x", y)
    vx = enumerate_subtree_vertices(game.treeplex_x, game.treeplex_x.root)
    assert value == pytest.approx((vx @ (A @ y.values)).max(), abs=1e-12)


def test_best_response_optimality_direction(kuhn, rng):
    y = _strategy(kuhn.treeplex_y, rng)
    br_val, _ = best_response_value(kuhn, "x", y)
    for _ in range(20):
        x = _strategy(kuhn.treeplex_x, rng)
        from spcfr.games import expected_payoff

        assert br_val >= expected_payoff(kuhn, x, y) - 1e-12
    x = _strategy(kuhn.treeplex_x, rng)
    br_y, _ = best_response_value(kuhn, "y", x)
    for _ in range(20):
        y2 = _strategy(kuhn.treeplex_y, rng)
        from spcfr.games import expected_payoff

        assert br_y <= expected_payoff(kuhn, x, y2) + 1e-12


def test_best_response_tie_break_lowest_index(kuhn):
    # zero opponent gradient: every action ties; lowest index must win
    y = SequenceFormVector(kuhn.treeplex_y, np.zeros(kuhn.treeplex_y.num_sequences))
    _, br1 = best_response_value(kuhn, "x", y)
    _, br2 = best_response_value(kuhn, "x", y)
    assert np.array_equal(br1.values, br2.values)
    tree = kuhn.treeplex_x
    for d in range(tree.num_decision_nodes):
        s, n = int(tree.seq_start[d]), int(tree.n_actions[d])
        p = int(tree.parent_seq[d])
        reach = 1.0 if p < 0 else br1.values[p]
        assert br1.values[s] == pytest.approx(reach)  # first action chosen


def test_saddle_residual_zero_at_lp_equilibrium(kuhn):
    value, x_star, y_star = lp_solve_game(kuhn)
    x = SequenceFormVector(kuhn.treeplex_x, x_star)
    y = SequenceFormVector(kuhn.treeplex_y, y_star)
    assert saddle_residual(kuhn, x, y) <= 1e-8


def test_saddle_residual_uniform_vs_enumeration(kuhn):
    x = _strategy(kuhn.treeplex_x)
    y = _strategy(kuhn.treeplex_y)
    A = dense_payoff(kuhn)
    vx = enumerate_subtree_vertices(kuhn.treeplex_x, kuhn.treeplex_x.root)
    vy = enumerate_subtree_vertices(kuhn.treeplex_y, kuhn.treeplex_y.root)
    oracle = (vx @ (A @ y.values)).max() - (vy @ (A.T @ x.values)).min()
    assert saddle_residual(kuhn, x, y) == pytest.approx(oracle, abs=1e-12)


def test_saddle_residual_scales_with_payoff(kuhn, rng):
    x = _strategy(kuhn.treeplex_x, rng)
    y = _strategy(kuhn.treeplex_y, rng)
    base = saddle_residual(kuhn, x, y)
    scaled = GameInstance(
        name="kuhn3x",
        treeplex_x=kuhn.treeplex_x,
        treeplex_y=kuhn.treeplex_y,
        payoff_rows=kuhn.payoff_rows,
        payoff_cols=kuhn.payoff_cols,
        payoff_vals=3.0 * kuhn.payoff_vals,
        payoff_norm=3.0 * kuhn.payoff_norm,
        loss_scale=kuhn.loss_scale / 3.0,
        big_blind=kuhn.big_blind,
    )
    assert saddle_residual(scaled, x, y) == pytest.approx(3.0 * base, rel=1e-12)


def test_residual_nonnegative_random_pairs(kuhn, rng):
    for _ in range(50):
        x = _strategy(kuhn.treeplex_x, rng)
        y = _strategy(kuhn.treeplex_y, rng)
        assert saddle_residual(kuhn, x, y) >= -1e-9


# -- oracle regrets -------------------------------------------------------


def test_enumeration_matches_induction(rng):
    game = build_random_game(6, 2, 2)
    tree = game.treeplex_x
    for nid in tree.nodes:
        lo, hi = tree.subtree_range(nid)
        cost = rng.normal(size=hi - lo)
        if count_subtree_vertices(tree, nid) <= metrics.VERTEX_ENUMERATION_CAP:
            by_enum = float((enumerate_subtree_vertices(tree, nid) @ cost).min())
            by_dp = metrics._min_by_induction(tree, nid, cost, lo)
            assert by_enum == pytest.approx(by_dp, abs=1e-12)


def test_brute_force_regret_zero_losses(kuhn):
    tree = kuhn.treeplex_x
    xh = np.full(tree.num_sequences, 0.5)
    out = brute_force_regret(tree, tree.root, [np.zeros(tree.num_sequences)], xhats=[xh])
    assert out == pytest.approx(0.0, abs=1e-15)


def test_brute_force_matches_incremental_at_leaves(rng):
    game = build_random_game(8, 2, 2)
    tree = game.treeplex_x
    opts = SolveOptions(algorithm="cfr_rm", record_every=64, record_iterates=True)
    trace = run_simultaneous(game, 40, opts)
    mx, _, _ = make_minimizers(game, 40, opts)
    losses, xhats = trace.iterates["loss_x"], trace.iterates["xhat_x"]
    for loss, xh in zip(losses, xhats):
        mx.xhat[:] = xh
        mx._pending = True
        mx.observe_loss(loss)
    hats = mx.counterfactual_regrets()
    for d, nid in enumerate(tree.decision_ids):
        node = tree.nodes[nid]
        if all(c is None for c in node.children):  # leaf decision node
            oracle = brute_force_regret(tree, nid, losses, xhats=xhats)
            assert hats[d] == pytest.approx(oracle, abs=1e-9)


# -- rate fitting ----------------------------------------------------------


def _synthetic_trace(ts, residuals):
    rows = [
        TraceRow(t=int(t), residual=float(r), residual_mbbg=0.0, regret_x=0.0,
                 regret_y=0.0, max_stability_violation=0.0, wall_ms=0.0)
        for t, r in zip(ts, residuals)
    ]
    return SolveTrace(game_name="synth", config={}, rows=rows)


def test_fit_exact_power_law():
    ts = np.arange(1, 129)
    exponent, constant = fit_convergence_rate(_synthetic_trace(ts, ts**-0.75))
    assert exponent == pytest.approx(-0.75, abs=1e-6)
    assert constant == pytest.approx(1.0, abs=1e-6)


def test_fit_with_constant():
    ts = np.arange(1, 201)
    exponent, constant = fit_convergence_rate(_synthetic_trace(ts, 3.0 * ts**-0.5))
    assert exponent == pytest.approx(-0.5, abs=1e-9)
    assert constant == pytest.approx(3.0, abs=1e-6)


def test_fit_excludes_nonpositive():
    ts = np.arange(1, 129)
    res = ts.astype(float) ** -0.75
    res[70] = 0.0
    exponent, _ = fit_convergence_rate(_synthetic_trace(ts, res))
    assert exponent == pytest.approx(-0.75, abs=1e-3)


def test_fit_requires_length():
    ts = np.arange(1, 10)
    with pytest.raises(ValueError):
        fit_convergence_rate(_synthetic_trace(ts, ts**-0.5))


def test_mbbg_conversion():
    assert residual_to_mbbg(0.1, 100.0) == pytest.approx(1.0)
    assert residual_to_mbbg(0.0, 2.0) == 0.0
    assert residual_to_mbbg(0.3, 2.0) > residual_to_mbbg(0.2, 2.0)
    with pytest.raises(ValueError):
        residual_to_mbbg(0.1, 0.0)


def test_trace_check_invariants():
    ts = [1, 2, 2]
    trace = _synthetic_trace(ts, [0.5, 0.4, 0.4])
    with pytest.raises(ValueError):
        trace.check()
    trace2 = _synthetic_trace([1, 2, 3], [0.5, -0.5, 0.4])
    with pytest.raises(ValueError):
        trace2.check()


def test_brute_force_size_guard():
    game = build_random_game(0, 2, 6)  # over a thousand sequences per player
    tree = game.treeplex_x
    with pytest.raises(ValueError, match="guard"):
        brute_force_regret(tree, tree.root, [np.zeros(tree.num_sequences)],
                           xhats=[np.full(tree.num_sequences, 0.5)])
