"""Pure-Python value-iteration sweep, the fallback for the compiled kernel.

Same contract and arithmetic order as the extension module so both produce
bit-identical iterates.
"""

from __future__ import annotations


def sweep(old, new, upd, span, ooff, tgt, lo, hi, maximize):
    """One Jacobi sweep over ``upd``; returns the max absolute change.

    old/new: value vectors (numpy float64); span[s] = (first, last) choice
    index of state s; ooff: per-choice outcome offsets; tgt/lo/hi: flat
    outcome arrays.
    """
    diff = 0.0
    for s in upd:
        first, last = span[s]
        best = None
        for c in range(first, last):
            o_begin = ooff[c]
            o_end = ooff[c + 1]
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
            else:
                idx = list(range(o_begin, o_end))
                if maximize:
                    idx.sort(key=lambda i: (-old[tgt[i]], tgt[i]))
                else:
                    idx.sort(key=lambda i: (old[tgt[i]], tgt[i]))
                remaining_low = 0.0
                for i in idx:
                    remaining_low += lo[i]
                assigned = 0.0
                total = 0.0
                for i in idx:
                    remaining_low -= lo[i]
                    p = 1.0 - assigned - remaining_low
                    if hi[i] < p:
                        p = hi[i]
                    assigned += p
                    total += p * old[tgt[i]]
            if best is None or (total > best if maximize else total < best):
                best = total
        if best is None:
            best = old[s]
        new[s] = best
        d = best - old[s]
        if d < 0.0:
            d = -d
        if d > diff:
            diff = d
    return diff
