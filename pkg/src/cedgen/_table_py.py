"""Pure-Python interpreter for flattened FSM tables.

Reference semantics for the compiled extension; also the fallback selected at
import when the extension is unavailable (see :mod:`cedgen.kernels`).
"""

from __future__ import annotations


def step_table(table, state, clocks, counters, ev):
    """Advance one window in place; returns (new_state, emitted)."""
    trans = table.trans
    preds = table.preds
    acts = table.acts
    emitted = False
    lo = table.trans_off[state]
    hi = table.trans_off[state + 1]
    for ti in range(lo, hi):
        row = trans[ti]
        if not (int(row[0]) >> ev) & 1:
            continue
        ok = True
        for pi in range(row[3], row[3] + row[4]):
            kind, idx, op, const = preds[pi]
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
        for ai in range(row[5], row[5] + row[6]):
            kind, a, b = acts[ai]
            if kind == 0:
                clocks[a] = 0
            elif kind == 1:
                clocks[a] = min(clocks[b], int(table.clock_caps[a]))
            elif kind == 2:
                counters[a] = min(int(b), int(table.counter_caps[a]))
            else:
                counters[a] = min(counters[a] + 1, int(table.counter_caps[a]))
        state = int(row[1])
        emitted = bool(row[2])
        break
    for ci in range(len(clocks)):
        cap = int(table.clock_caps[ci])
        if clocks[ci] < cap:
            clocks[ci] += 1
    return state, emitted


def run_table(table, trace):
    """Fold :func:`step_table` over an index-encoded trace."""
    state = table.init_state
    clocks = [int(c) for c in table.clock_caps]
    counters = [0] * len(table.counter_caps)
    out = []
    for ev in trace:
        state, emitted = step_table(table, state, clocks, counters, ev)
        out.append(emitted)
    return out
