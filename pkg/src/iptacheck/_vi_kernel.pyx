# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled value-iteration sweep; mirrors _vi_py.sweep exactly."""

import numpy as np


def sweep(
    double[::1] old,
    double[::1] new,
    long long[::1] upd,
    long long[:, ::1] span,
    long long[::1] ooff,
    long long[::1] tgt,
    double[::1] lo,
    double[::1] hi,
    bint maximize,
):
    cdef double diff = 0.0
    cdef Py_ssize_t k, s, c, i, j, m, n_out
    cdef long long first, last, o_begin, o_end
    cdef double best, total, assigned, remaining_low, p, d
    cdef bint have_best, point
    cdef Py_ssize_t max_sup = 0

    for c in range(ooff.shape[0] - 1):
        if ooff[c + 1] - ooff[c] > max_sup:
            max_sup = ooff[c + 1] - ooff[c]
    order_arr = np.empty(max_sup if max_sup > 0 else 1, dtype=np.int64)
    cdef long long[::1] order = order_arr
    cdef long long tmp

    for k in range(upd.shape[0]):
        s = <Py_ssize_t> upd[k]
        first = span[s, 0]
        last = span[s, 1]
        have_best = False
        best = 0.0
        for c in range(first, last):
            o_begin = ooff[c]
            o_end = ooff[c + 1]
            n_out = <Py_ssize_t> (o_end - o_begin)
            point = True
            for i in range(o_begin, o_end):
                if lo[i] != hi[i]:
                    point = False
                    break
            if point:
                # fixed distribution: plain expectation, no ordering needed
                total = 0.0
                for i in range(o_begin, o_end):
                    total += lo[i] * old[tgt[i]]
                if not have_best:
                    best = total
                    have_best = True
                elif maximize:
                    if total > best:
                        best = total
                else:
                    if total < best:
                        best = total
                continue
            for i in range(n_out):
                order[i] = o_begin + i
            # insertion sort by (value, target id); descending value when maximizing
            for i in range(1, n_out):
                tmp = order[i]
                j = i - 1
                if maximize:
                    while j >= 0 and (
                        old[tgt[order[j]]] < old[tgt[tmp]]
                        or (old[tgt[order[j]]] == old[tgt[tmp]] and tgt[order[j]] > tgt[tmp])
                    ):
                        order[j + 1] = order[j]
                        j -= 1
                else:
                    while j >= 0 and (
                        old[tgt[order[j]]] > old[tgt[tmp]]
                        or (old[tgt[order[j]]] == old[tgt[tmp]] and tgt[order[j]] > tgt[tmp])
                    ):
                        order[j + 1] = order[j]
                        j -= 1
                order[j + 1] = tmp
            remaining_low = 0.0
            for i in range(n_out):
                remaining_low += lo[order[i]]
            assigned = 0.0
            total = 0.0
            for i in range(n_out):
                m = <Py_ssize_t> order[i]
                remaining_low -= lo[m]
                p = 1.0 - assigned - remaining_low
                if hi[m] < p:
                    p = hi[m]
                assigned += p
                total += p * old[tgt[m]]
            if not have_best:
                best = total
                have_best = True
            elif maximize:
                if total > best:
                    best = total
            else:
                if total < best:
                    best = total
        if not have_best:
            best = old[s]
        new[s] = best
        d = best - old[s]
        if d < 0.0:
            d = -d
        if d > diff:
            diff = d
    return diff
