"""Backend parity: the numba kernels and the numpy fallbacks must agree."""

import numpy as np
import pytest

import spcfr._kernels_np as knp
from spcfr import kernels
from spcfr.games import build_kuhn, build_random_game

try:
    import spcfr._kernels_nb as knb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

pytestmark = pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")


def _random_inputs(tree, rng):
    S, J = tree.num_sequences, tree.num_decision_nodes
    return {
        "cum_lhat": rng.normal(size=S),
        "m_seq": rng.normal(scale=0.1, size=S),
        "eta": rng.uniform(0.01, 0.5, size=J),
        "cum_played": rng.normal(size=J),
        "xh_new": _random_xhat(tree, rng),
        "xh_old": _random_xhat(tree, rng),
        "ell": rng.normal(size=S),
        "grad": rng.normal(size=S),
    }


def _random_xhat(tree, rng):
    xh = np.zeros(tree.num_sequences)
    for d in range(tree.num_decision_nodes):
        s, n = int(tree.seq_start[d]), int(tree.n_actions[d])
        w = rng.random(n) + 1e-9
        xh[s : s + n] = w / w.sum()
    return xh


@pytest.mark.parametrize("alg,reg", [(0, 0), (0, 1), (1, 0)])
def test_decision_pass_parity(rng, alg, reg):
    for game in (build_kuhn(), build_random_game(2, 2, 3)):
        tree = game.treeplex_x
        z = _random_inputs(tree, rng)
        outs = []
        for mod in (knp, knb):
            xhat = np.zeros(tree.num_sequences)
            mhat = np.zeros(tree.num_sequences)
            mod.decision_pass(
                tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
                z["cum_lhat"].copy(), z["m_seq"], z["eta"], alg, reg,
                z["cum_played"].copy(), xhat, mhat,
            )
            outs.append((xhat, mhat))
        assert np.allclose(outs[0][0], outs[1][0], atol=1e-12)
        assert np.allclose(outs[0][1], outs[1][1], atol=1e-12)


def test_observe_and_sequence_parity(rng):
    tree = build_random_game(5, 2, 3).treeplex_y
    z = _random_inputs(tree, rng)
    results = []
    for mod in (knp, knb):
        cum_lhat = z["cum_lhat"].copy()
        cum_played = z["cum_played"].copy()
        lhat = np.zeros(tree.num_sequences)
        mod.observe_pass(
            tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
            z["ell"], z["xh_new"], cum_lhat, cum_played, lhat,
        )
        seq = np.zeros(tree.num_sequences)
        mod.behavioral_to_sequence(tree.seq_start, tree.n_actions, tree.parent_seq, z["xh_new"], seq)
        results.append((cum_lhat, cum_played, lhat, seq))
    for a, b in zip(results[0], results[1]):
        assert np.allclose(a, b, atol=1e-12)


def test_stability_and_best_response_parity(rng):
    tree = build_random_game(9, 2, 2).treeplex_x
    z = _random_inputs(tree, rng)
    results = []
    for mod in (knp, knb):
        d2_dec = np.zeros(tree.num_decision_nodes)
        d2_obs = np.full(tree.num_sequences, np.nan)
        loc = np.zeros(tree.num_decision_nodes)
        mod.stability_pass(
            tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
            z["xh_new"], z["xh_old"], d2_dec, d2_obs, loc,
        )
        out = np.zeros(tree.num_sequences)
        val = mod.best_response_pass(
            tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
            tree.parent_seq, z["grad"], True, out,
        )
        results.append((d2_dec, np.nan_to_num(d2_obs), loc, out, val))
    for a, b in zip(results[0], results[1]):
        assert np.allclose(a, b, atol=1e-12)


def test_matvec_parity(rng):
    game = build_random_game(3, 2, 3)
    y = rng.random(game.treeplex_y.num_sequences)
    a = knp.coo_matvec(game.payoff_rows, game.payoff_cols, game.payoff_vals, y,
                       game.treeplex_x.num_sequences)
    b = knb.coo_matvec(game.payoff_rows, game.payoff_cols, game.payoff_vals, y,
                       game.treeplex_x.num_sequences)
    assert np.allclose(a, b, atol=1e-14)


def test_argmin_parity(rng):
    for n in (2, 5, 17):
        for _ in range(50):
            z = rng.normal(scale=3.0, size=n)
            eta = float(rng.uniform(0.05, 2.0))
            for fn_np, fn_nb in (
                (knp.argmin_entropy, knb._argmin_entropy),
                (knp.argmin_euclidean, knb._argmin_euclidean),
            ):
                out = np.empty(n)
                fn_nb(z, eta, out)
                assert np.allclose(fn_np(z, eta), out, atol=1e-12)


def test_backend_switch_roundtrip():
    prev = kernels.backend()
    kernels.set_backend("numpy")
    assert kernels.backend() == "numpy"
    kernels.set_backend(prev)
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_env_flag_selects_numpy_backend():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from spcfr import kernels; print(kernels.backend())"],
        env={"PATH": "/usr/bin:/bin", "SPCFR_NUMBA": "0"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_full_solve_backend_parity():
    from spcfr.cfr import SolveOptions, run_simultaneous
    from spcfr.games import build_kuhn

    game = build_kuhn()
    opts = SolveOptions(algorithm="oftrl_theory", regularizer="euclidean", record_every=16)
    traces = {}
    prev = kernels.backend()
    try:
        for backend in ("numba", "numpy"):
            kernels.set_backend(backend)
            traces[backend] = run_simultaneous(game, 64, opts)
    finally:
        kernels.set_backend(prev)
    for a, b in zip(traces["numba"].rows, traces["numpy"].rows):
        assert a.t == b.t
        assert a.residual == b.residual
        assert a.regret_x == b.regret_x
        assert a.regret_y == b.regret_y
