"""Hand-written per-rule interpreters, used as the oracle for the compiled
machines.

Each function walks the trace with ordinary control flow and returns the
per-window emission list.  Deliberately independent of the FSM engine: no
guards, tables or shared helpers beyond the event alphabet.
"""

from __future__ import annotations

from ..core import AtomicEvent

WALK = AtomicEvent.WALK
SIT = AtomicEvent.SIT
BRUSH = AtomicEvent.BRUSH
CLICK = AtomicEvent.CLICK
DRINK = AtomicEvent.DRINK
EAT = AtomicEvent.EAT
TYPE = AtomicEvent.TYPE
FLUSH = AtomicEvent.FLUSH_TOILET
WASH = AtomicEvent.WASH

WORK = {TYPE, CLICK}
MEAL = {EAT, DRINK}
SESSION = {EAT, DRINK, SIT}


class UnsupportedClass(ValueError):
    pass


def _e1(trace):
    out = []
    armed = False
    run = 0
    for ae in trace:
        emit = False
        if not armed:
            if ae is FLUSH:
                armed, run = True, 0
        elif ae is WASH:
            run += 1
            if run >= 4:
                armed = False
        elif ae in WORK:
            emit = True
            armed, run = False, 0
        else:
            run = 0  # flush included: re-flushing restarts the wash requirement
        out.append(emit)
    return out


def _clean_before(trace, start):
    """True when 4 consecutive wash windows all lie in the 24 before start."""
    lo = max(0, start - 24)
    for j in range(lo, start - 3):
        if all(trace[j + k] is WASH for k in range(4)):
            return True
    return False


def _e2(trace):
    out = []
    in_session = False
    for t, ae in enumerate(trace):
        emit = False
        if in_session and ae not in SESSION:
            in_session = False
        if not in_session and ae in MEAL:
            in_session = True
            emit = not _clean_before(trace, t)
        out.append(emit)
    return out


def _e3(trace):
    out = []
    in_sess = False
    cum = gap = 0
    for ae in trace:
        emit = False
        if not in_sess:
            if ae is BRUSH:
                in_sess, cum, gap = True, 1, 0
        elif ae is BRUSH:
            cum += 1
            gap = 0
            if cum >= 24:
                in_sess = False  # adequate brushing; e7's event, stay silent
        else:
            gap += 1
            if gap >= 3:
                emit = cum < 24
                in_sess = False
        out.append(emit)
    return out


def _e4(trace):
    out = []
    stage = "idle"  # idle -> brushed -> brushed+eat / brushed+drink
    for ae in trace:
        emit = False
        if ae is BRUSH:
            stage = "brushed"
        elif stage == "brushed":
            if ae is EAT:
                stage = "eat"
            elif ae is DRINK:
                stage = "drink"
        elif stage == "eat" and ae is DRINK:
            emit = True
            stage = "idle"
        elif stage == "drink" and ae is EAT:
            emit = True
            stage = "idle"
        out.append(emit)
    return out


def _e5(trace):
    out = []
    stage = "idle"  # idle -> seated -> working
    for ae in trace:
        emit = False
        if stage == "idle":
            if ae is SIT:
                stage = "seated"
        elif stage == "seated":
            if ae in WORK:
                stage = "working"
            elif ae is WALK:
                stage = "idle"
        else:  # working; sit is an allowed filler here
            if ae is WALK:
                emit = True
                stage = "idle"
        out.append(emit)
    return out


def _e6(trace):
    out = []
    run = 0
    for ae in trace:
        run = run + 1 if ae is WASH else 0
        emit = run >= 6
        if emit:
            run = 0
        out.append(emit)
    return out


def _e7(trace):
    out = []
    total = 0
    for ae in trace:
        emit = False
        if ae is BRUSH:
            total += 1
            if total >= 24:
                emit = True
                total = 0
        out.append(emit)
    return out


def _e8(trace):
    out = []
    last_eat = None
    for t, ae in enumerate(trace):
        emit = False
        if ae is EAT:
            last_eat = t
        elif ae in WORK and last_eat is not None:
            emit = t - last_eat >= 36
            last_eat = None  # the opportunity is spent either way
        out.append(emit)
    return out


def _e9(trace):
    out = []
    pending = []
    prev_type = False
    for t, ae in enumerate(trace):
        emit = False
        if ae is TYPE and not prev_type:
            pending = [s for s in pending if t - s <= 12]
            pending.append(t)
            if len(pending) >= 3:
                emit = True
                pending = []
        prev_type = ae is TYPE
        out.append(emit)
    return out


def _e10(trace):
    out = []
    armed = False
    clicks = 0
    for ae in trace:
        emit = False
        if ae is SIT:
            armed, clicks = True, 0
        elif ae is WALK:
            armed = False
        elif armed and ae is CLICK:
            clicks += 1
            if clicks >= 5:
                emit = True
                armed = False
        out.append(emit)
    return out


_INTERPRETERS = {
    1: _e1, 2: _e2, 3: _e3, 4: _e4, 5: _e5,
    6: _e6, 7: _e7, 8: _e8, 9: _e9, 10: _e10,
}


def reference_label(ce: int, trace) -> list[bool]:
    """Emission sequence for one rule, by direct procedural simulation."""
    fn = _INTERPRETERS.get(ce)
    if fn is None:
        raise UnsupportedClass(f"no reference interpreter for class {ce}")
    return fn(list(trace))
