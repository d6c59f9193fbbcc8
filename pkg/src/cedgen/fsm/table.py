"""Flattened numeric transition tables for the execution kernels.

A table is the machine with all names resolved to indices and all guards and
actions packed into int32 arrays, so the hot per-window loop never touches
Python objects.  Both the compiled extension and the pure-Python fallback
interpret the same table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .machine import (
    CLOCK_COPY,
    CLOCK_RESET,
    COMPARATORS,
    COUNTER_INC,
    COUNTER_SET,
    FsmDefinition,
)

_OP_CODE = {op: i for i, op in enumerate(COMPARATORS)}
ACT_CLOCK_RESET = 0
ACT_CLOCK_COPY = 1
ACT_COUNTER_SET = 2
ACT_COUNTER_INC = 3

# Columns of the transition array.
TR_MASK, TR_TARGET, TR_EMIT, TR_PRED_OFF, TR_PRED_CNT, TR_ACT_OFF, TR_ACT_CNT = range(7)
# Predicate columns: kind (0 clock / 1 counter), index, op code, constant.
# Action columns: kind, primary index, secondary index or value.


@dataclass(frozen=True)
class FsmTable:
    states: tuple
    state_index: dict
    init_state: int
    trans: np.ndarray       # (n_trans, 7) int32
    trans_off: np.ndarray   # (n_states + 1,) int32
    preds: np.ndarray       # (n_preds, 4) int32
    acts: np.ndarray        # (n_acts, 3) int32
    clock_caps: np.ndarray  # (n_clocks,) int32
    counter_caps: np.ndarray  # (n_counters,) int32


# Keyed by id with the definition pinned alongside, so ids cannot be reused.
_CACHE: dict = {}


def build_table(defn: FsmDefinition) -> FsmTable:
    key = id(defn)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit[1]

    state_index = {s: i for i, s in enumerate(defn.states)}
    clock_index = {c: i for i, c in enumerate(defn.clocks)}
    counter_index = {c: i for i, c in enumerate(defn.counters)}
    ccap, ncap = defn.caps()

    trans_rows, pred_rows, act_rows, offsets = [], [], [], [0]
    for s in defn.states:
        for tr in defn.transitions.get(s, ()):
            pred_off = len(pred_rows)
            for p in tr.guard.clock_preds:
                pred_rows.append((0, clock_index[p.name], _OP_CODE[p.op], p.const))
            for p in tr.guard.counter_preds:
                pred_rows.append((1, counter_index[p.name], _OP_CODE[p.op], p.const))
            act_off = len(act_rows)
            for a in tr.actions:
                if a.kind == CLOCK_RESET:
                    act_rows.append((ACT_CLOCK_RESET, clock_index[a.name], 0))
                elif a.kind == CLOCK_COPY:
                    act_rows.append((ACT_CLOCK_COPY, clock_index[a.name], clock_index[a.arg]))
                elif a.kind == COUNTER_SET:
                    act_rows.append((ACT_COUNTER_SET, counter_index[a.name], int(a.arg)))
                elif a.kind == COUNTER_INC:
                    act_rows.append((ACT_COUNTER_INC, counter_index[a.name], 0))
            trans_rows.append((
                tr.guard.events.mask(),
                state_index[tr.target],
                1 if tr.emit else 0,
                pred_off,
                len(pred_rows) - pred_off,
                act_off,
                len(act_rows) - act_off,
            ))
        offsets.append(len(trans_rows))

    table = FsmTable(
        states=defn.states,
        state_index=state_index,
        init_state=state_index[defn.initial],
        trans=np.array(trans_rows, dtype=np.int32).reshape(len(trans_rows), 7),
        trans_off=np.array(offsets, dtype=np.int32),
        preds=np.array(pred_rows, dtype=np.int32).reshape(len(pred_rows), 4),
        acts=np.array(act_rows, dtype=np.int32).reshape(len(act_rows), 3),
        clock_caps=np.array([ccap[c] for c in defn.clocks], dtype=np.int32),
        counter_caps=np.array([ncap[c] for c in defn.counters], dtype=np.int32),
    )
    _CACHE[key] = (defn, table)
    return table
