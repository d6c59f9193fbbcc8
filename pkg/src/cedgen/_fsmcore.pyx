# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the per-window FSM loop.

Interprets the same flattened tables as cedgen._table_py; selected at import
by cedgen.kernels when available.
"""

import numpy as np


def run_table_native(int[:, :] trans, int[:] trans_off, int[:, :] preds,
                     int[:, :] acts, int[:] clock_caps, int[:] counter_caps,
                     int init_state, int[:] trace):
    cdef int n_clocks = clock_caps.shape[0]
    cdef int n_counters = counter_caps.shape[0]
    cdef int T = trace.shape[0]
    out_arr = np.zeros(T, dtype=np.uint8)
    cdef unsigned char[:] out = out_arr
    clocks_arr = np.asarray(clock_caps).copy()
    counters_arr = np.zeros(n_counters, dtype=np.int32)
    cdef int[:] clocks = clocks_arr
    cdef int[:] counters = counters_arr

    cdef int state = init_state
    cdef int t, ev, ti, lo, hi, pi, ai
    cdef int kind, idx, op, const, val, a, b, cap
    cdef bint ok

    for t in range(T):
        ev = trace[t]
        lo = trans_off[state]
        hi = trans_off[state + 1]
        for ti in range(lo, hi):
            if not (trans[ti, 0] >> ev) & 1:
                continue
            ok = True
            for pi in range(trans[ti, 3], trans[ti, 3] + trans[ti, 4]):
                kind = preds[pi, 0]
                idx = preds[pi, 1]
                op = preds[pi, 2]
                const = preds[pi, 3]
                val = clocks[idx] if kind == 0 else counters[idx]
                if op == 0:
                    ok = val < const
                elif op == 1:
                    ok = val <= const
                elif op == 2:
                    ok = val == const
                elif op == 3:
                    ok = val >= const
                else:
                    ok = val > const
                if not ok:
                    break
            if not ok:
                continue
            for ai in range(trans[ti, 5], trans[ti, 5] + trans[ti, 6]):
                kind = acts[ai, 0]
                a = acts[ai, 1]
                b = acts[ai, 2]
                if kind == 0:
                    clocks[a] = 0
                elif kind == 1:
                    clocks[a] = min(clocks[b], clock_caps[a])
                elif kind == 2:
                    counters[a] = min(b, counter_caps[a])
                else:
                    counters[a] = min(counters[a] + 1, counter_caps[a])
            state = trans[ti, 1]
            out[t] = trans[ti, 2]
            break
        for ti in range(n_clocks):
            cap = clock_caps[ti]
            if clocks[ti] < cap:
                clocks[ti] += 1
    return out_arr
