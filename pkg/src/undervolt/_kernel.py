"""numba kernel for one weight tile streaming one batch.

Mirrors ``dataflow.simulate_chain`` (the reference engine) chain by chain;
``tests/test_dataflow.py`` checks the two agree bit for bit.
"""

import numba as nb
import numpy as np

_U = np.uint64
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)
_G = _U(0x9E3779B97F4A7C15)
_S30 = _U(30)
_S27 = _U(27)
_S31 = _U(31)

N_COUNTERS = 6
EXECUTED, SKIPPED, DROPPED, PADDED, ERRORS, ERROR_CYCLES = range(N_COUNTERS)

GOLDEN, TEP, TED, TEDROP = 0, 1, 2, 3
ACC_MASK = (1 << 24) - 1
ACC_HALF = 1 << 23


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True, inline="always")
def absorb(h, x):
    return mix64((h ^ _U(x)) + _G)


@nb.njit(cache=True, inline="always")
def wrap24(x):
    return ((x + ACC_HALF) & ACC_MASK) - ACC_HALF


@nb.njit(cache=True)
def run_tile(
    w, a, acc, n, ti, tk, n_tk, policy, zero_skip, sample, threshold, always,
    seed, layer, sample_ids, counters, col_errors, batch_err,
):
    """Accumulate tile (ti, tk) of ``w`` times ``a`` into ``acc`` in place.

    Returns nothing; statistics are added to ``counters`` and ``col_errors``.
    """
    out_dim, in_dim = w.shape
    batch = a.shape[1]
    block = ti * n_tk + tk
    k_lo = tk * n
    i_lo = ti * n
    i_hi = min(i_lo + n, out_dim)

    base = mix64(_U(seed) + _G)
    err_pre = absorb(absorb(absorb(base, 1), layer), block)
    cut_pre = absorb(absorb(absorb(base, 2), layer), block)

    prev = np.zeros(n, dtype=np.int64)
    cyc = np.zeros(2 * n + batch, dtype=np.bool_)
    for i in range(i_lo, i_hi):
        il = i - i_lo
        prev[:] = 0
        err_i = absorb(err_pre, i)
        cut_i = absorb(cut_pre, i)
        for jl in range(batch):
            j = sample_ids[jl]
            err_ij = absorb(err_i, j)
            s = np.int64(0)
            pred_err = False
            for kl in range(n):
                k = k_lo + kl
                if k >= in_dim:
                    counters[PADDED] += 1
                    pred_err = False
                    prev[kl] = s
                    continue
                if pred_err:
                    counters[DROPPED] += 1
                    pred_err = False
                    prev[kl] = s
                    continue
                wv = np.int64(w[i, k])
                av = np.int64(a[k, jl])
                if zero_skip and (wv == 0 or av == 0):
                    counters[SKIPPED] += 1
                    prev[kl] = s
                    continue
                counters[EXECUTED] += 1
                correct = wrap24(s + wv * av)
                err = False
                if sample:
                    if always:
                        err = True
                    else:
                        err = absorb(err_ij, k) < threshold
                if err and policy == TEP:
                    cut = absorb(absorb(cut_i, j), k) % _U(24)
                    low = (np.int64(1) << np.int64(cut)) - 1
                    bits = ((correct & ACC_MASK) & low) | ((prev[kl] & ACC_MASK) & ~low & ACC_MASK)
                    latched = bits - (1 << 24) if bits & ACC_HALF else bits
                    err = latched != correct
                    s = latched
                else:
                    s = correct
                if err:
                    counters[ERRORS] += 1
                    col_errors[il] += 1
                    batch_err[0] += 1
                    if policy == TED:
                        cyc[il + jl + kl] = True
                    elif policy == TEDROP:
                        pred_err = True
                prev[kl] = s
            acc[i, jl] = wrap24(acc[i, jl] + s)
    counters[ERROR_CYCLES] += np.sum(cyc)
