"""Kernel backend selection.

The hot loops (tree passes, sparse matvec, best response) exist twice: a
numba ``@njit`` build in ``_kernels_nb`` and a pure-numpy build in
``_kernels_np``. The numba build is used when numba imports cleanly and the
environment variable ``SPCFR_NUMBA`` is not set to ``0``; ``set_backend``
switches at runtime (used by the benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_np

_BACKENDS = ("numba", "numpy")


def _default_backend() -> str:
    if os.environ.get("SPCFR_NUMBA", "1").strip().lower() in {"0", "false", "off"}:
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


_active = _default_backend()


def backend() -> str:
    return _active


def set_backend(name: str):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; expected one of {_BACKENDS}")
    if name == "numba":
        import numba  # noqa: F401  (raises if unavailable)
    _active = name


def _mod():
    if _active == "numba":
        from . import _kernels_nb

        return _kernels_nb
    return _kernels_np


def coo_matvec(out_idx, in_idx, vals, vin, nout):
    return _mod().coo_matvec(out_idx, in_idx, vals, vin, nout)


def decision_pass(tree, cum_lhat, m_seq, eta, alg_code, reg_code, cum_played, xhat, mhat):
    _mod().decision_pass(
        tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
        cum_lhat, m_seq, eta, alg_code, reg_code, cum_played, xhat, mhat,
    )


def behavioral_to_sequence(tree, xhat, out):
    _mod().behavioral_to_sequence(tree.seq_start, tree.n_actions, tree.parent_seq, xhat, out)


def observe_pass(tree, ell_seq, xhat, cum_lhat, cum_played, lhat):
    _mod().observe_pass(
        tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
        ell_seq, xhat, cum_lhat, cum_played, lhat,
    )


def stability_pass(tree, xh_new, xh_old, d2_dec, d2_obs_seq, local_d2):
    _mod().stability_pass(
        tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
        xh_new, xh_old, d2_dec, d2_obs_seq, local_d2,
    )


def best_response_pass(tree, grad, maximize, out):
    return _mod().best_response_pass(
        tree.seq_start, tree.n_actions, tree.child_ptr, tree.child_idx,
        tree.parent_seq, grad, maximize, out,
    )


def argmin_entropy(z, eta):
    if _active == "numba":
        from . import _kernels_nb
        import numpy as np

        out = np.empty(z.size)
        _kernels_nb._argmin_entropy(z.astype(float), float(eta), out)
        return out
    return _kernels_np.argmin_entropy(z, eta)


def argmin_euclidean(z, eta):
    if _active == "numba":
        from . import _kernels_nb
        import numpy as np

        out = np.empty(z.size)
        _kernels_nb._argmin_euclidean(z.astype(float), float(eta), out)
        return out
    return _kernels_np.argmin_euclidean(z, eta)
