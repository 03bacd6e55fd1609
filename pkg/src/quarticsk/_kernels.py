"""Compiled inner loops.

Both kernels work on the quadratic form Q = sum_{ij} g_ij sh_i sh_j with
local fields h_i = sum_j (g_ij + g_ji) sh_j.  Flipping spin i changes sh_i by
d = -2 sigma_i, so Q += d h_i + g_ii d^2 and h_j += (g_ji + g_ij) d, which is
O(N) per flip.  The magnetization, and hence the quartic term, follows from the
number of up spins.
"""

import math

import numpy as np
from numba import njit

# accumulator layout: [running max, sum w, kahan comp, sum w*f, kahan comp]
_MAX, _SW, _SWC, _SWF, _SWFC = 0, 1, 2, 3, 4
ACC_FULL, ACC_BAND, ACC_COMP = 0, 1, 2


@njit(cache=True, nogil=True)
def _push(acc, j, val, f, compensated):
    """Add exp(val) (and exp(val) * f) to a streaming log-sum-exp accumulator.

    Returns the weight of this term relative to the updated max and the factor
    by which older terms were rescaled (1.0 if the max did not move).
    """
    scale = 1.0
    if val > acc[j, _MAX]:
        if acc[j, _MAX] == -np.inf:
            scale = 0.0
        else:
            scale = math.exp(acc[j, _MAX] - val)
        acc[j, _SW] *= scale
        acc[j, _SWC] *= scale
        acc[j, _SWF] *= scale
        acc[j, _SWFC] *= scale
        acc[j, _MAX] = val
        w = 1.0
    else:
        w = math.exp(val - acc[j, _MAX])
    if compensated:
        y = w - acc[j, _SWC]
        t = acc[j, _SW] + y
        acc[j, _SWC] = (t - acc[j, _SW]) - y
        acc[j, _SW] = t
        y = w * f - acc[j, _SWFC]
        t = acc[j, _SWF] + y
        acc[j, _SWFC] = (t - acc[j, _SWF]) - y
        acc[j, _SWF] = t
    else:
        acc[j, _SW] += w
        acc[j, _SWF] += w * f
    return w, scale


@njit(cache=True, nogil=True)
def gray_enumerate(g, beta, m, band_k, want_corr, compensated, checkpoints):
    """Visit all 2^N words in reflected Gray-code order.

    The word at step t is t ^ (t >> 1); step 0 is all spins down.
    `band_k[k]` flags whether k up spins puts s = 2k/N - 1 in the band.
    `checkpoints` is a sorted array of steps at which H is recorded.
    """
    n = g.shape[0]
    spin = np.full(n, -1.0)
    sh = np.full(n, -1.0 - m)
    sym = g + g.T
    h = np.zeros(n)
    for a in range(n):
        for b in range(n):
            h[a] += sym[a, b] * sh[b]
    q_form = 0.0
    for a in range(n):
        for b in range(n):
            q_form += g[a, b] * sh[a] * sh[b]

    k = 0
    log2 = math.log(2.0)
    lp_up = math.log1p(m) - log2
    lp_down = math.log1p(-m) - log2
    c_h = beta / math.sqrt(2.0)
    c_x = 1.0 / math.sqrt(2.0 * n)
    c_quart = 0.25 * beta * beta * n
    sqrt_n = math.sqrt(n)

    acc = np.zeros((3, 5))
    acc[:, _MAX] = -np.inf
    band_max = -np.inf
    all_max = -np.inf
    if want_corr:
        corr = np.zeros((n, n))
        corr_c = np.zeros((n, n))
    else:
        corr = np.zeros((1, 1))
        corr_c = np.zeros((1, 1))
    n_chk = checkpoints.shape[0]
    chk_h = np.empty(n_chk)
    ci = 0

    total = 1 << n
    for t in range(total):
        if t > 0:
            i = 0
            tt = t
            while (tt & 1) == 0:
                tt >>= 1
                i += 1
            d = -2.0 * spin[i]
            q_form += d * h[i] + g[i, i] * d * d
            for j in range(n):
                h[j] += sym[j, i] * d
            sh[i] += d
            spin[i] = -spin[i]
            if spin[i] > 0:
                k += 1
            else:
                k -= 1
        s = (2.0 * k - n) / n
        q = 1.0 + m * m - 2.0 * m * s
        ham = c_h * q_form - c_quart * q * q
        logw = k * lp_up + (n - k) * lp_down + ham
        x = c_x * q_form
        f = x / sqrt_n - 0.5 * beta * q * q
        if x > all_max:
            all_max = x

        w, scale = _push(acc, ACC_FULL, logw, f, compensated)
        if band_k[k]:
            _push(acc, ACC_BAND, logw, f, compensated)
            if x > band_max:
                band_max = x
        else:
            _push(acc, ACC_COMP, logw, f, compensated)

        if want_corr:
            if scale != 1.0:
                for a in range(n):
                    for b in range(a, n):
                        corr[a, b] *= scale
                        corr_c[a, b] *= scale
            for a in range(n):
                wa = w * sh[a]
                for b in range(a, n):
                    term = wa * sh[b]
                    if compensated:
                        y = term - corr_c[a, b]
                        tot = corr[a, b] + y
                        corr_c[a, b] = (tot - corr[a, b]) - y
                        corr[a, b] = tot
                    else:
                        corr[a, b] += term

        while ci < n_chk and checkpoints[ci] == t:
            chk_h[ci] = ham
            ci += 1

    if want_corr:
        for a in range(n):
            for b in range(a + 1, n):
                corr[b, a] = corr[a, b]
    return acc, band_max, all_max, corr, chk_h


@njit(cache=True, nogil=True)
def pt_sweeps(g, betas, m, spin, sh, h, q_form, k_up, sites, unif, swap_u, measure, r2_acc, dh_acc):
    """Run Metropolis sweeps with replica-exchange moves, in place.

    State arrays have a leading (replica, rung) pair of axes; there are two
    independent replicas per rung.  Each sweep makes N single-spin-flip
    proposals per chain, then attempts swaps between adjacent rungs for each
    replica.  On sweeps with measure[s] set, R12^2 per rung is added to
    r2_acc and the per-chain beta-derivative of log Z / N to dh_acc.
    Returns the number of accepted swaps.
    """
    n = g.shape[0]
    n_rep = spin.shape[0]
    n_rung = spin.shape[1]
    sqrt2 = math.sqrt(2.0)
    c_x = 1.0 / math.sqrt(2.0 * n)
    sqrt_n = math.sqrt(n)
    mm = m * m
    swaps = 0
    for sw in range(sites.shape[0]):
        for r in range(n_rep):
            for l in range(n_rung):
                b = betas[l]
                c_quart = 0.25 * b * b * n
                for step in range(n):
                    i = sites[sw, r, l, step]
                    old = spin[r, l, i]
                    d = -2.0 * old
                    dq = d * h[r, l, i] + g[i, i] * d * d
                    k_old = k_up[r, l]
                    k_new = k_old - 1 if old > 0 else k_old + 1
                    q_old = 1.0 + mm - 2.0 * m * (2.0 * k_old - n) / n
                    q_new = 1.0 + mm - 2.0 * m * (2.0 * k_new - n) / n
                    dlw = (math.log1p(-m * old) - math.log1p(m * old)
                           + b / sqrt2 * dq - c_quart * (q_new * q_new - q_old * q_old))
                    if dlw >= 0.0 or unif[sw, r, l, step] < math.exp(dlw):
                        q_form[r, l] += dq
                        for j in range(n):
                            h[r, l, j] += (g[j, i] + g[i, j]) * d
                        sh[r, l, i] += d
                        spin[r, l, i] = -old
                        k_up[r, l] = k_new

        for r in range(n_rep):
            for l in range(n_rung - 1):
                b0 = betas[l]
                b1 = betas[l + 1]
                q0 = 1.0 + mm - 2.0 * m * (2.0 * k_up[r, l] - n) / n
                q1 = 1.0 + mm - 2.0 * m * (2.0 * k_up[r, l + 1] - n) / n
                a0 = q_form[r, l] / sqrt2
                a1 = q_form[r, l + 1] / sqrt2
                e0 = 0.25 * n * q0 * q0
                e1 = 0.25 * n * q1 * q1
                delta = (b0 - b1) * (a1 - a0) - (b0 * b0 - b1 * b1) * (e1 - e0)
                if delta >= 0.0 or swap_u[sw, r, l] < math.exp(delta):
                    swaps += 1
                    for j in range(n):
                        tmp = spin[r, l, j]
                        spin[r, l, j] = spin[r, l + 1, j]
                        spin[r, l + 1, j] = tmp
                        tmp = sh[r, l, j]
                        sh[r, l, j] = sh[r, l + 1, j]
                        sh[r, l + 1, j] = tmp
                        tmp = h[r, l, j]
                        h[r, l, j] = h[r, l + 1, j]
                        h[r, l + 1, j] = tmp
                    tmp = q_form[r, l]
                    q_form[r, l] = q_form[r, l + 1]
                    q_form[r, l + 1] = tmp
                    kt = k_up[r, l]
                    k_up[r, l] = k_up[r, l + 1]
                    k_up[r, l + 1] = kt

        if measure[sw]:
            for l in range(n_rung):
                ov = 0.0
                for j in range(n):
                    ov += sh[0, l, j] * sh[1, l, j]
                ov /= n
                r2_acc[l] += ov * ov
                b = betas[l]
                for r in range(n_rep):
                    q = 1.0 + mm - 2.0 * m * (2.0 * k_up[r, l] - n) / n
                    dh_acc[l] += (c_x * q_form[r, l] / sqrt_n - 0.5 * b * q * q) / n_rep
    return swaps
