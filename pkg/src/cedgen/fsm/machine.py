"""Timed/counting finite-state-machine representation and per-window execution.

Machines advance exactly one transition per window: guards are evaluated in
listed order against the incoming atomic event and the current clock/counter
values, the first match wins, and every state has an implicit "else stay"
self-loop.  Actions apply after the guard is chosen; all clocks then advance
by one, saturating one past the largest constant they are ever compared to,
so memory stays bounded regardless of trace length.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from ..core import AE_ALPHABET, AtomicEvent, ce_name

COMPARATORS = ("<", "<=", "==", ">=", ">")

# Action kinds.  Clocks are always ticking, so there is no enable/disable:
# "reset" rearms a clock at zero and saturation makes a never-reset clock read
# as stale.  "copy" exists for machines that shift a queue of ages (e9).
CLOCK_RESET = "clock_reset"
CLOCK_COPY = "clock_copy"
COUNTER_SET = "counter_set"
COUNTER_INC = "counter_inc"


class FsmError(ValueError):
    pass


@dataclass(frozen=True)
class EventSet:
    """A set of atomic events a guard accepts, remembering how it was written."""

    members: frozenset
    display: str

    def __contains__(self, ae: AtomicEvent) -> bool:
        return ae in self.members

    def mask(self) -> int:
        m = 0
        for ae in self.members:
            m |= 1 << ae.index
        return m


def event_set(events: Iterable[AtomicEvent], negate: bool = False) -> EventSet:
    base = frozenset(events)
    members = frozenset(AE_ALPHABET) - base if negate else base
    inner = ",".join(sorted(ae.value for ae in base))
    display = ("!{%s}" % inner) if negate else ("{%s}" % inner)
    return EventSet(members=members, display=display)


ANY_EVENT = EventSet(members=frozenset(AE_ALPHABET), display="any")


@dataclass(frozen=True)
class Predicate:
    name: str
    op: str
    const: int

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise FsmError(f"bad comparator {self.op!r}")
        if self.const < 0:
            raise FsmError(f"negative guard constant {self.const}")

    def __str__(self) -> str:
        return f"{self.name}{self.op}{self.const}"


@dataclass(frozen=True)
class Guard:
    events: EventSet
    clock_preds: tuple = ()
    counter_preds: tuple = ()

    def __str__(self) -> str:
        parts = [self.events.display]
        parts += [str(p) for p in self.clock_preds + self.counter_preds]
        return " & ".join(parts)


@dataclass(frozen=True)
class Action:
    kind: str
    name: str
    arg: object = None  # source clock for copy, value for counter_set

    def __str__(self) -> str:
        if self.kind == CLOCK_RESET:
            return f"reset {self.name}"
        if self.kind == CLOCK_COPY:
            return f"copy {self.name} {self.arg}"
        if self.kind == COUNTER_SET:
            return f"set {self.name} {self.arg}"
        if self.kind == COUNTER_INC:
            return f"inc {self.name}"
        raise FsmError(f"bad action kind {self.kind!r}")


def reset_clock(name: str) -> Action:
    return Action(CLOCK_RESET, name)


def copy_clock(dst: str, src: str) -> Action:
    return Action(CLOCK_COPY, dst, src)


def set_counter(name: str, value: int) -> Action:
    return Action(COUNTER_SET, name, value)


def inc_counter(name: str) -> Action:
    return Action(COUNTER_INC, name)


@dataclass(frozen=True)
class Transition:
    guard: Guard
    actions: tuple
    target: str
    emit: bool = False


@dataclass(frozen=True)
class FsmDefinition:
    machine_id: str
    ce_class: int
    states: tuple
    initial: str
    clocks: tuple = ()
    counters: tuple = ()
    transitions: dict = field(default_factory=dict)  # state -> tuple[Transition]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(set(self.states)) != len(self.states) or not self.states:
            raise FsmError(f"{self.machine_id}: states must be a non-empty unique list")
        if self.initial not in self.states:
            raise FsmError(f"{self.machine_id}: initial state {self.initial!r} undeclared")
        clocks, counters = set(self.clocks), set(self.counters)
        for src, trs in self.transitions.items():
            if src not in self.states:
                raise FsmError(f"{self.machine_id}: transitions from undeclared state {src!r}")
            for tr in trs:
                if tr.target not in self.states:
                    raise FsmError(f"{self.machine_id}: target {tr.target!r} undeclared")
                if not tr.guard.events.members:
                    raise FsmError(f"{self.machine_id}: unsatisfiable guard (empty event set)")
                for p in tr.guard.clock_preds:
                    if p.name not in clocks:
                        raise FsmError(f"{self.machine_id}: unbound clock {p.name!r}")
                for p in tr.guard.counter_preds:
                    if p.name not in counters:
                        raise FsmError(f"{self.machine_id}: unbound counter {p.name!r}")
                for a in tr.actions:
                    if a.kind in (CLOCK_RESET, CLOCK_COPY) and a.name not in clocks:
                        raise FsmError(f"{self.machine_id}: unbound clock {a.name!r}")
                    if a.kind == CLOCK_COPY and a.arg not in clocks:
                        raise FsmError(f"{self.machine_id}: unbound clock {a.arg!r}")
                    if a.kind in (COUNTER_SET, COUNTER_INC) and a.name not in counters:
                        raise FsmError(f"{self.machine_id}: unbound counter {a.name!r}")

    def caps(self) -> tuple[dict, dict]:
        """Saturation bound per clock/counter: one past the largest compared constant."""
        ccap = {c: 1 for c in self.clocks}
        ncap = {c: 1 for c in self.counters}
        for trs in self.transitions.values():
            for tr in trs:
                for p in tr.guard.clock_preds:
                    ccap[p.name] = max(ccap[p.name], p.const + 1)
                for p in tr.guard.counter_preds:
                    ncap[p.name] = max(ncap[p.name], p.const + 1)
                for a in tr.actions:
                    if a.kind == COUNTER_SET:
                        ncap[a.name] = max(ncap[a.name], int(a.arg))
        return ccap, ncap


@dataclass(frozen=True)
class FsmState:
    """Runtime snapshot of one machine; ``window`` counts processed windows."""

    state: str
    clock_values: tuple
    counter_values: tuple
    window: int = 0


def initial_state(defn: FsmDefinition) -> FsmState:
    ccap, _ = defn.caps()
    # Never-reset clocks read as stale (at cap), so age guards start false.
    return FsmState(
        state=defn.initial,
        clock_values=tuple(ccap[c] for c in defn.clocks),
        counter_values=tuple(0 for _ in defn.counters),
        window=0,
    )


def step(defn: FsmDefinition, st: FsmState, ae: AtomicEvent) -> tuple[FsmState, bool]:
    """Advance one window.  Total over valid states; deterministic."""
    from .table import build_table  # local import: table caches per definition
    from .. import _table_py

    table = build_table(defn)
    sidx = table.state_index[st.state]
    clocks = list(st.clock_values)
    counters = list(st.counter_values)
    sidx, emitted = _table_py.step_table(table, sidx, clocks, counters, ae.index)
    return (
        FsmState(
            state=table.states[sidx],
            clock_values=tuple(clocks),
            counter_values=tuple(counters),
            window=st.window + 1,
        ),
        emitted,
    )


def run(defn: FsmDefinition, trace: Sequence[AtomicEvent]) -> list[bool]:
    """Per-window emission sequence; equals folding :func:`step` over the trace."""
    from .table import build_table
    from ..kernels import run_table

    if not trace:
        raise FsmError("trace must be non-empty")
    table = build_table(defn)
    return run_table(table, [ae.index for ae in trace])


def to_dot(defn: FsmDefinition) -> str:
    """Stable DOT rendering: states as nodes, guards/actions as edge labels."""
    lines = [f'digraph "{defn.machine_id}" {{', "  rankdir=LR;"]
    lines.append(f'  "{defn.initial}" [shape=doublecircle];')
    for s in defn.states:
        if s != defn.initial:
            lines.append(f'  "{s}" [shape=circle];')
    for s in defn.states:
        for tr in defn.transitions.get(s, ()):
            label = str(tr.guard)
            if tr.actions:
                label += " / " + ", ".join(str(a) for a in tr.actions)
            if tr.emit:
                label += f" / emit {ce_name(defn.ce_class)}"
            label = label.replace('"', '\\"')
            lines.append(f'  "{s}" -> "{tr.target}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
