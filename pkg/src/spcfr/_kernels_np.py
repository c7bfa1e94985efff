"""Pure-numpy implementations of the solver kernels.

Same contracts as the numba versions in ``_kernels_nb``; selected via
``SPCFR_NUMBA=0`` or :func:`spcfr.kernels.set_backend`. Loops run per
decision node with vectorized slice arithmetic inside.
"""

from __future__ import annotations

import numpy as np


def argmin_entropy(z: np.ndarray, eta: float) -> np.ndarray:
    w = -eta * z
    w = w - w.max()
    e = np.exp(w)
    p = e / e.sum()
    tiny = p < 1e-300
    if tiny.any():
        p[tiny] = 0.0
        p /= p.sum()
    return p


def project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    hold = u + (1.0 - css) / ks > 0.0
    rho = int(np.nonzero(hold)[0][-1])
    theta = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + theta, 0.0)


def argmin_euclidean(z: np.ndarray, eta: float) -> np.ndarray:
    return project_simplex(-eta * z)


def coo_matvec(out_idx, in_idx, vals, vin, nout):
    return np.bincount(out_idx, weights=vals * vin[in_idx], minlength=nout)


def decision_pass(
    seq_start, n_act, child_ptr, child_idx, cum_lhat, m_seq, eta,
    alg_code, reg_code, cum_played, xhat, mhat,
):
    # alg_code: 0 = OFTRL, 1 = regret matching. reg_code: 0 = entropy, 1 = euclidean.
    J = seq_start.size
    sdot = np.zeros(J)
    for d in range(J - 1, -1, -1):
        s = int(seq_start[d])
        n = int(n_act[d])
        mh = m_seq[s : s + n].copy()
        for a in range(n):
            lo, hi = child_ptr[s + a], child_ptr[s + a + 1]
            if hi > lo:
                mh[a] += sdot[child_idx[lo:hi]].sum()
        mhat[s : s + n] = mh
        if alg_code == 0:
            z = cum_lhat[s : s + n] + mh
            if reg_code == 0:
                xh = argmin_entropy(z, float(eta[d]))
            else:
                xh = argmin_euclidean(z, float(eta[d]))
        else:
            w = np.maximum(cum_played[d] - cum_lhat[s : s + n], 0.0)
            tot = w.sum()
            xh = w / tot if tot > 0.0 else np.full(n, 1.0 / n)
        xhat[s : s + n] = xh
        sdot[d] = float(mh @ xh)


def behavioral_to_sequence(seq_start, n_act, parent_seq, xhat, out):
    J = seq_start.size
    for d in range(J):
        s = int(seq_start[d])
        n = int(n_act[d])
        p = int(parent_seq[d])
        mass = 1.0 if p < 0 else out[p]
        out[s : s + n] = xhat[s : s + n] * mass


def observe_pass(
    seq_start, n_act, child_ptr, child_idx, ell_seq, xhat,
    cum_lhat, cum_played, lhat,
):
    J = seq_start.size
    sdot = np.zeros(J)
    for d in range(J - 1, -1, -1):
        s = int(seq_start[d])
        n = int(n_act[d])
        lh = ell_seq[s : s + n].copy()
        for a in range(n):
            lo, hi = child_ptr[s + a], child_ptr[s + a + 1]
            if hi > lo:
                lh[a] += sdot[child_idx[lo:hi]].sum()
        lhat[s : s + n] = lh
        played = float(lh @ xhat[s : s + n])
        sdot[d] = played
        cum_played[d] += played
        cum_lhat[s : s + n] += lh


def stability_pass(
    seq_start, n_act, child_ptr, child_idx, xh_new, xh_old,
    d2_dec, d2_obs_seq, local_d2,
):
    # Squared 2-norm of the change of the subtree-local sequence form at each
    # decision node (d2_dec) and each observation node keyed by its parent
    # sequence (d2_obs_seq), plus the local behavioral change (local_d2).
    J = seq_start.size
    n2n = np.zeros(J)
    n2o = np.zeros(J)
    cross = np.zeros(J)
    for d in range(J - 1, -1, -1):
        s = int(seq_start[d])
        n = int(n_act[d])
        sn = so = sc = ld = 0.0
        for a in range(n):
            q = s + a
            lo, hi = child_ptr[q], child_ptr[q + 1]
            cn = co = cc = 0.0
            if hi > lo:
                kids = child_idx[lo:hi]
                cn = n2n[kids].sum()
                co = n2o[kids].sum()
                cc = cross[kids].sum()
                d2_obs_seq[q] = cn + co - 2.0 * cc
            xn = xh_new[q]
            xo = xh_old[q]
            sn += xn * xn * (1.0 + cn)
            so += xo * xo * (1.0 + co)
            sc += xn * xo * (1.0 + cc)
            ld += (xn - xo) * (xn - xo)
        n2n[d] = sn
        n2o[d] = so
        cross[d] = sc
        d2_dec[d] = sn + so - 2.0 * sc
        local_d2[d] = ld


def best_response_pass(
    seq_start, n_act, child_ptr, child_idx, parent_seq, grad, maximize, out,
):
    J = seq_start.size
    val = np.zeros(J)
    best = np.zeros(J, dtype=np.int64)
    for d in range(J - 1, -1, -1):
        s = int(seq_start[d])
        n = int(n_act[d])
        acc = grad[s : s + n].copy()
        for a in range(n):
            lo, hi = child_ptr[s + a], child_ptr[s + a + 1]
            if hi > lo:
                acc[a] += val[child_idx[lo:hi]].sum()
        a_star = int(np.argmax(acc)) if maximize else int(np.argmin(acc))
        val[d] = acc[a_star]
        best[d] = a_star
    out[:] = 0.0
    for d in range(J):
        p = int(parent_seq[d])
        reach = 1.0 if p < 0 else out[p]
        out[int(seq_start[d]) + int(best[d])] = reach
    return float(val[0])
