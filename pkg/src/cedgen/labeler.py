"""Online complex-event labeling: all rules run concurrently over a trace or
live stream; labels land only at each event's completion window."""

from __future__ import annotations

from dataclasses import dataclass

from .core import CE_DEFAULT, AtomicEvent, validate_trace
from .fsm import machine
from .rules import RuleSet


@dataclass
class LabelSession:
    """Streaming state: one machine state per rule, advancing in lockstep."""

    rules: RuleSet
    rule_states: dict  # ce id -> FsmState
    window: int = 0

    @classmethod
    def start(cls, rules: RuleSet) -> "LabelSession":
        return cls(
            rules=rules,
            rule_states={ce: machine.initial_state(d) for ce, d in rules.rules.items()},
        )


def stream_step(session: LabelSession, ae: AtomicEvent) -> frozenset:
    """Advance every machine one window; returns this window's emission set."""
    emitted = set()
    for ce, defn in session.rules.rules.items():
        st, fired = machine.step(defn, session.rule_states[ce], ae)
        session.rule_states[ce] = st
        if fired:
            emitted.add(ce)
    session.window += 1
    return frozenset(emitted)


def label_trace(rules: RuleSet, trace) -> tuple:
    """Per-window label sets; equals the fold of :func:`stream_step`."""
    trace = validate_trace(trace)
    emissions = {ce: machine.run(defn, trace) for ce, defn in rules.rules.items()}
    return tuple(
        frozenset(ce for ce, em in emissions.items() if em[t])
        for t in range(len(trace))
    )


def default_priority() -> tuple:
    """Ascending CE id: e1 outranks e10 when emissions collide."""
    return tuple(range(1, 11))


def to_single_label(seq, priority=None) -> tuple:
    """Project label sets to one label per window; empty set becomes 0."""
    order = tuple(priority) if priority is not None else default_priority()
    rank = {ce: i for i, ce in enumerate(order)}
    out = []
    for labels in seq:
        if not labels:
            out.append(CE_DEFAULT)
        else:
            out.append(min(labels, key=lambda ce: rank[ce]))
    return tuple(out)
