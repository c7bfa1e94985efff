"""Numba-compiled solver kernels (scalar inner loops, nopython mode).

Contracts match ``_kernels_np``; see there for semantics. ``cache=True`` so
repeat runs skip compilation.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _argmin_entropy(z, eta, out):
    n = z.size
    m = -eta * z[0]
    for i in range(1, n):
        w = -eta * z[i]
        if w > m:
            m = w
    tot = 0.0
    for i in range(n):
        out[i] = np.exp(-eta * z[i] - m)
        tot += out[i]
    tot2 = 0.0
    for i in range(n):
        out[i] /= tot
        if out[i] < 1e-300:
            out[i] = 0.0
        tot2 += out[i]
    for i in range(n):
        out[i] /= tot2


@njit(cache=True)
def _argmin_euclidean(z, eta, out):
    n = z.size
    for i in range(n):
        out[i] = -eta * z[i]
    u = np.sort(out)[::-1]
    css = 0.0
    theta = 0.0
    for k in range(n):
        css += u[k]
        t = (1.0 - css) / (k + 1.0)
        if u[k] + t > 0.0:
            theta = t
    for i in range(n):
        v = out[i] + theta
        out[i] = v if v > 0.0 else 0.0


@njit(cache=True)
def coo_matvec(out_idx, in_idx, vals, vin, nout):
    out = np.zeros(nout)
    for k in range(vals.size):
        out[out_idx[k]] += vals[k] * vin[in_idx[k]]
    return out


@njit(cache=True)
def decision_pass(
    seq_start, n_act, child_ptr, child_idx, cum_lhat, m_seq, eta,
    alg_code, reg_code, cum_played, xhat, mhat,
):
    J = seq_start.size
    sdot = np.zeros(J)
    for d in range(J - 1, -1, -1):
        s = seq_start[d]
        n = n_act[d]
        for a in range(n):
            q = s + a
            acc = m_seq[q]
            for c in range(child_ptr[q], child_ptr[q + 1]):
                acc += sdot[child_idx[c]]
            mhat[q] = acc
        if alg_code == 0:
            z = cum_lhat[s : s + n] + mhat[s : s + n]
            if reg_code == 0:
                _argmin_entropy(z, eta[d], xhat[s : s + n])
            else:
                _argmin_euclidean(z, eta[d], xhat[s : s + n])
        else:
            pos = 0.0
            for a in range(n):
                w = cum_played[d] - cum_lhat[s + a]
                if w > 0.0:
                    pos += w
            if pos > 0.0:
                for a in range(n):
                    w = cum_played[d] - cum_lhat[s + a]
                    xhat[s + a] = w / pos if w > 0.0 else 0.0
            else:
                for a in range(n):
                    xhat[s + a] = 1.0 / n
        acc2 = 0.0
        for a in range(n):
            acc2 += mhat[s + a] * xhat[s + a]
        sdot[d] = acc2


@njit(cache=True)
def behavioral_to_sequence(seq_start, n_act, parent_seq, xhat, out):
    J = seq_start.size
    for d in range(J):
        s = seq_start[d]
        n = n_act[d]
        p = parent_seq[d]
        mass = 1.0 if p < 0 else out[p]
        for a in range(n):
            out[s + a] = xhat[s + a] * mass


@njit(cache=True)
def observe_pass(
    seq_start, n_act, child_ptr, child_idx, ell_seq, xhat,
    cum_lhat, cum_played, lhat,
):
    J = seq_start.size
    sdot = np.zeros(J)
    for d in range(J - 1, -1, -1):
        s = seq_start[d]
        n = n_act[d]
        played = 0.0
        for a in range(n):
            q = s + a
            acc = ell_seq[q]
            for c in range(child_ptr[q], child_ptr[q + 1]):
                acc += sdot[child_idx[c]]
            lhat[q] = acc
            played += acc * xhat[q]
        sdot[d] = played
        cum_played[d] += played
        for a in range(n):
            cum_lhat[s + a] += lhat[s + a]


@njit(cache=True)
def stability_pass(
    seq_start, n_act, child_ptr, child_idx, xh_new, xh_old,
    d2_dec, d2_obs_seq, local_d2,
):
    J = seq_start.size
    n2n = np.zeros(J)
    n2o = np.zeros(J)
    cross = np.zeros(J)
    for d in range(J - 1, -1, -1):
        s = seq_start[d]
        n = n_act[d]
        sn = 0.0
        so = 0.0
        sc = 0.0
        ld = 0.0
        for a in range(n):
            q = s + a
            cn = 0.0
            co = 0.0
            cc = 0.0
            lo = child_ptr[q]
            hi = child_ptr[q + 1]
            for c in range(lo, hi):
                k = child_idx[c]
                cn += n2n[k]
                co += n2o[k]
                cc += cross[k]
            if hi > lo:
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


@njit(cache=True)
def best_response_pass(
    seq_start, n_act, child_ptr, child_idx, parent_seq, grad, maximize, out,
):
    J = seq_start.size
    val = np.zeros(J)
    best = np.zeros(J, dtype=np.int64)
    for d in range(J - 1, -1, -1):
        s = seq_start[d]
        n = n_act[d]
        best_v = 0.0
        best_a = 0
        for a in range(n):
            q = s + a
            acc = grad[q]
            for c in range(child_ptr[q], child_ptr[q + 1]):
                acc += val[child_idx[c]]
            if a == 0:
                best_v = acc
                best_a = 0
            elif maximize and acc > best_v:
                best_v = acc
                best_a = a
            elif (not maximize) and acc < best_v:
                best_v = acc
                best_a = a
        val[d] = best_v
        best[d] = best_a
    for q in range(out.size):
        out[q] = 0.0
    for d in range(J):
        p = parent_seq[d]
        reach = 1.0 if p < 0 else out[p]
        out[seq_start[d] + best[d]] = reach
    return val[0]
