"""Kernel selection: compiled extension when built, pure Python otherwise.

Set ``CEDGEN_PURE=1`` to force the Python path (used by the benchmark and by
tests that cross-check the two implementations).
"""

from __future__ import annotations

import os

import numpy as np

from . import _table_py

if os.environ.get("CEDGEN_PURE") == "1":
    _native = None
else:
    try:
        from . import _fsmcore as _native
    except ImportError:
        _native = None

IMPLEMENTATION = "cython" if _native is not None else "python"


def run_table_python(table, trace) -> list[bool]:
    return _table_py.run_table(table, trace)


def run_table_native(table, trace) -> list[bool]:
    if _native is None:
        raise RuntimeError("compiled kernel not available")
    out = _native.run_table_native(
        table.trans, table.trans_off, table.preds, table.acts,
        table.clock_caps, table.counter_caps, table.init_state,
        np.asarray(trace, dtype=np.int32),
    )
    return [bool(v) for v in out]


def run_table(table, trace) -> list[bool]:
    """Per-window emissions for an index-encoded trace."""
    if _native is not None:
        return run_table_native(table, trace)
    return run_table_python(table, trace)
