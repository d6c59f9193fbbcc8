"""Pattern expressions and their compilation to timed/counting machines.

Six constructors cover the rule categories the toolkit supports:

* ``Seq`` — relaxed-order sequence of steps, each with an optional skip set;
* ``Dur`` — duration of an event set, consecutive (with optional grace gaps)
  or cumulative (pause/resume);
* ``Within`` — bounds the span of an inner pattern from its anchoring step;
* ``Gap`` — minimum delay between one event set and a later one;
* ``Count`` — repetition counting, optionally armed/disarmed by other events;
* ``Absent`` — violation when a trigger is followed by a watched token before
  a required sub-pattern completes.

``Then`` and ``Seq``-style chaining plus ``And`` compose patterns; both are
API-level only (the rule DSL exposes the six constructors).  Every expression
compiles to a deterministic :class:`FsmDefinition` with statically bounded
state count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .machine import (
    ANY_EVENT,
    EventSet,
    FsmDefinition,
    Guard,
    Predicate,
    Transition,
    inc_counter,
    reset_clock,
    set_counter,
)

CONSECUTIVE = "consecutive"
CUMULATIVE = "cumulative"

#: Expansion safety valve for And-composition; anything larger indicates an
#: effectively unbounded counter in a future constructor.
MAX_EXPANDED_STATES = 20000


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    events: EventSet
    skip: EventSet | None = None


@dataclass(frozen=True)
class Seq:
    steps: tuple

    def __post_init__(self):
        if not self.steps:
            raise CompileError("SEQ needs at least one step")


@dataclass(frozen=True)
class Dur:
    events: EventSet
    n: int
    mode: str = CONSECUTIVE
    grace: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise CompileError(f"DUR bound must be >= 1, got {self.n}")
        if self.mode not in (CONSECUTIVE, CUMULATIVE):
            raise CompileError(f"bad DUR mode {self.mode!r}")
        if self.grace and self.mode != CONSECUTIVE:
            raise CompileError("grace only applies to consecutive mode")
        if self.grace < 0:
            raise CompileError("grace must be >= 0")


@dataclass(frozen=True)
class Within:
    inner: object
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise CompileError(f"WITHIN bound must be >= 1, got {self.n}")


@dataclass(frozen=True)
class Gap:
    after: EventSet
    before: EventSet
    min_n: int

    def __post_init__(self):
        if self.min_n < 1:
            raise CompileError(f"GAP min must be >= 1, got {self.min_n}")


@dataclass(frozen=True)
class Count:
    events: EventSet
    n: int
    exact: bool = False
    arm: EventSet | None = None
    disarm: EventSet | None = None

    def __post_init__(self):
        if self.n < 1:
            raise CompileError(f"COUNT bound must be >= 1, got {self.n}")
        if self.disarm is not None and self.arm is None:
            raise CompileError("COUNT disarm requires arm")


@dataclass(frozen=True)
class Absent:
    required: object
    trigger: EventSet
    violation: EventSet
    lookback: int | None = None

    def __post_init__(self):
        if self.lookback is not None and self.lookback < 1:
            raise CompileError("ABSENT lookback must be >= 1")


@dataclass(frozen=True)
class Then:
    first: object
    second: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


def compile_pattern(expr, ce: int, machine_id: str | None = None) -> FsmDefinition:
    """Compile a pattern expression into a deterministic machine for class ce."""
    mid = machine_id or f"e{ce}"
    if isinstance(expr, Seq):
        return _compile_seq(expr, ce, mid)
    if isinstance(expr, Dur):
        return _compile_dur(expr, ce, mid)
    if isinstance(expr, Within):
        return _compile_within(expr, ce, mid)
    if isinstance(expr, Gap):
        return _compile_gap(expr, ce, mid)
    if isinstance(expr, Count):
        return _compile_count(expr, ce, mid)
    if isinstance(expr, Absent):
        return _compile_absent(expr, ce, mid)
    if isinstance(expr, Then):
        return _compile_then(expr, ce, mid)
    if isinstance(expr, And):
        return _compile_and(expr, ce, mid)
    raise CompileError(f"not a pattern expression: {expr!r}")


def _compile_seq(expr: Seq, ce: int, mid: str) -> FsmDefinition:
    """States S0..Sk; Sk doubles as the post-emit re-arm state mirroring S0.

    Guard order per waiting state: advance, skip, repeat of the step just
    matched, restart on a first-step token, reset to idle.
    """
    k = len(expr.steps)
    states = tuple(f"S{i}" for i in range(k + 1))
    first = expr.steps[0].events
    transitions: dict = {}

    def arm_transitions():
        return (Transition(Guard(first), (), "S1", emit=(k == 1)),)

    transitions["S0"] = arm_transitions()
    transitions[f"S{k}"] = arm_transitions() + (
        Transition(Guard(ANY_EVENT), (), "S0"),
    )
    for i in range(1, k):
        step = expr.steps[i]
        final = i + 1 == k
        trs = [Transition(Guard(step.events), (), f"S{i + 1}", emit=final)]
        if step.skip is not None and step.skip.members:
            trs.append(Transition(Guard(step.skip), (), f"S{i}"))
        trs.append(Transition(Guard(expr.steps[i - 1].events), (), f"S{i}"))
        trs.append(Transition(Guard(first), (), "S1"))
        trs.append(Transition(Guard(ANY_EVENT), (), "S0"))
        transitions[f"S{i}"] = tuple(trs)
    return FsmDefinition(mid, ce, states, "S0", transitions=transitions)


def _compile_dur(expr: Dur, ce: int, mid: str) -> FsmDefinition:
    ev, n = expr.events, expr.n
    if expr.mode == CUMULATIVE:
        trs = (
            Transition(
                Guard(ev, counter_preds=(Predicate("cum", ">=", n - 1),)),
                (set_counter("cum", 0),), "S", emit=True,
            ),
            Transition(Guard(ev), (inc_counter("cum"),), "S"),
        )
        return FsmDefinition(mid, ce, ("S",), "S", counters=("cum",),
                             transitions={"S": trs})

    if n == 1:
        trs = (Transition(Guard(ev), (), "IDLE", emit=True),)
        return FsmDefinition(mid, ce, ("IDLE",), "IDLE", transitions={"IDLE": trs})

    not_ev = EventSet(
        members=frozenset(ANY_EVENT.members) - ev.members,
        display=f"!{ev.display}",
    )
    run_trs = [
        Transition(
            Guard(ev, counter_preds=(Predicate("run", ">=", n - 1),)),
            (), "IDLE", emit=True,
        ),
        Transition(Guard(ev), (inc_counter("run"), set_counter("gap", 0)), "RUN"),
        Transition(
            Guard(not_ev, counter_preds=(Predicate("gap", ">=", expr.grace),)),
            (), "IDLE",
        ),
    ]
    if expr.grace > 0:
        run_trs.append(Transition(Guard(not_ev), (inc_counter("gap"),), "RUN"))
    transitions = {
        "IDLE": (Transition(Guard(ev), (set_counter("run", 1), set_counter("gap", 0)), "RUN"),),
        "RUN": tuple(run_trs),
    }
    return FsmDefinition(mid, ce, ("IDLE", "RUN"), "IDLE",
                         counters=("run", "gap"), transitions=transitions)


def _compile_within(expr: Within, ce: int, mid: str) -> FsmDefinition:
    """Bound the inner pattern's span from the step that leaves its idle state.

    Once the span clock reaches the bound without completion, the machine
    aborts back to idle; mid-pattern restarts do not re-anchor.
    """
    inner = compile_pattern(expr.inner, ce, mid)
    clock = _fresh_name("span", inner.clocks)
    transitions = {}
    for s in inner.states:
        trs = []
        if s != inner.initial:
            trs.append(Transition(
                Guard(ANY_EVENT, clock_preds=(Predicate(clock, ">=", expr.n),)),
                (), inner.initial,
            ))
        for tr in inner.transitions.get(s, ()):
            actions = tr.actions
            if s == inner.initial and tr.target != inner.initial:
                actions = actions + (reset_clock(clock),)
            trs.append(Transition(tr.guard, actions, tr.target, tr.emit))
        transitions[s] = tuple(trs)
    return FsmDefinition(mid, ce, inner.states, inner.initial,
                         clocks=inner.clocks + (clock,), counters=inner.counters,
                         transitions=transitions)


def _compile_gap(expr: Gap, ce: int, mid: str) -> FsmDefinition:
    transitions = {
        "IDLE": (Transition(Guard(expr.after), (reset_clock("since"),), "TRACK"),),
        "TRACK": (
            Transition(Guard(expr.after), (reset_clock("since"),), "TRACK"),
            Transition(
                Guard(expr.before, clock_preds=(Predicate("since", ">=", expr.min_n),)),
                (), "IDLE", emit=True,
            ),
            Transition(Guard(expr.before), (), "IDLE"),
        ),
    }
    return FsmDefinition(mid, ce, ("IDLE", "TRACK"), "IDLE",
                         clocks=("since",), transitions=transitions)


def _compile_count(expr: Count, ce: int, mid: str) -> FsmDefinition:
    ev, n = expr.events, expr.n
    hit = Predicate("hits", ">=", n - 1)
    if expr.arm is None:
        after = (set_counter("hits", 0),) if expr.exact else (inc_counter("hits"),)
        trs = (
            Transition(Guard(ev, counter_preds=(hit,)), after, "S", emit=True),
            Transition(Guard(ev), (inc_counter("hits"),), "S"),
        )
        return FsmDefinition(mid, ce, ("S",), "S", counters=("hits",),
                             transitions={"S": trs})

    armed = [
        Transition(Guard(expr.arm), (set_counter("hits", 0),), "ARMED"),
    ]
    if expr.disarm is not None:
        armed.append(Transition(Guard(expr.disarm), (), "DISARMED"))
    if expr.exact:
        armed.append(Transition(Guard(ev, counter_preds=(hit,)), (), "DISARMED", emit=True))
    else:
        armed.append(Transition(Guard(ev, counter_preds=(hit,)), (inc_counter("hits"),),
                                "ARMED", emit=True))
    armed.append(Transition(Guard(ev), (inc_counter("hits"),), "ARMED"))
    transitions = {
        "DISARMED": (Transition(Guard(expr.arm), (set_counter("hits", 0),), "ARMED"),),
        "ARMED": tuple(armed),
    }
    return FsmDefinition(mid, ce, ("DISARMED", "ARMED"), "DISARMED",
                         counters=("hits",), transitions=transitions)


def _compile_absent(expr: Absent, ce: int, mid: str) -> FsmDefinition:
    """Trigger arms the required pattern; a violation token while it has not
    completed emits.  Completion silently disarms (or opens a lookback-limited
    safe period when a lookback is given); a repeated trigger resets progress.
    """
    inner = compile_pattern(expr.required, ce, mid)
    rename = {s: f"R_{s}" for s in inner.states}
    states = ["IDLE"] + [rename[s] for s in inner.states]
    safe_target = "IDLE"
    clocks = inner.clocks
    if expr.lookback is not None:
        states.append("SAFE")
        safe_target = "SAFE"
        age = _fresh_name("age", clocks)
        clocks = clocks + (age,)
    transitions = {
        "IDLE": (Transition(Guard(expr.trigger), (), rename[inner.initial]),),
    }
    for s in inner.states:
        trs = [
            Transition(Guard(expr.violation), (), "IDLE", emit=True),
            Transition(Guard(expr.trigger), (), rename[inner.initial]),
        ]
        for tr in inner.transitions.get(s, ()):
            if tr.emit:
                actions = tr.actions
                if expr.lookback is not None:
                    actions = actions + (reset_clock(age),)
                trs.append(Transition(tr.guard, actions, safe_target))
            else:
                trs.append(Transition(tr.guard, tr.actions, rename[tr.target]))
        transitions[rename[s]] = tuple(trs)
    if expr.lookback is not None:
        transitions["SAFE"] = (
            Transition(
                Guard(expr.violation, clock_preds=(Predicate(age, "<=", expr.lookback),)),
                (), "IDLE",
            ),
            Transition(Guard(expr.violation), (), "IDLE", emit=True),
            Transition(Guard(expr.trigger), (), rename[inner.initial]),
        )
    return FsmDefinition(mid, ce, tuple(states), "IDLE", clocks=clocks,
                         counters=inner.counters, transitions=transitions)


def _compile_then(expr: Then, ce: int, mid: str) -> FsmDefinition:
    """Sequential composition: second phase starts the window after the first
    completes; emission happens at the second pattern's completion."""
    a = compile_pattern(expr.first, ce, mid)
    b = compile_pattern(expr.second, ce, mid)
    ra = {s: f"A_{s}" for s in a.states}
    rb = {s: f"B_{s}" for s in b.states}
    rclk_a = {c: f"a_{c}" for c in a.clocks}
    rclk_b = {c: f"b_{c}" for c in b.clocks}
    rctr_a = {c: f"a_{c}" for c in a.counters}
    rctr_b = {c: f"b_{c}" for c in b.counters}

    transitions = {}
    for side, defn, rs, rclk, rctr, done_target, final in (
        ("a", a, ra, rclk_a, rctr_a, rb[b.initial], False),
        ("b", b, rb, rclk_b, rctr_b, ra[a.initial], True),
    ):
        for s in defn.states:
            trs = []
            for tr in defn.transitions.get(s, ()):
                guard = Guard(
                    tr.guard.events,
                    tuple(Predicate(rclk[p.name], p.op, p.const) for p in tr.guard.clock_preds),
                    tuple(Predicate(rctr[p.name], p.op, p.const) for p in tr.guard.counter_preds),
                )
                actions = tuple(_rename_action(x, rclk, rctr) for x in tr.actions)
                if tr.emit:
                    # Re-arm the other phase's counters at the hand-off so a
                    # later pass through it starts from scratch.
                    other = rctr_b if side == "a" else rctr_a
                    actions = actions + tuple(set_counter(c, 0) for c in other.values())
                    trs.append(Transition(guard, actions, done_target, emit=final))
                else:
                    trs.append(Transition(guard, actions, rs[tr.target]))
            transitions[rs[s]] = tuple(trs)
    states = tuple(ra[s] for s in a.states) + tuple(rb[s] for s in b.states)
    return FsmDefinition(
        mid, ce, states, ra[a.initial],
        clocks=tuple(rclk_a.values()) + tuple(rclk_b.values()),
        counters=tuple(rctr_a.values()) + tuple(rctr_b.values()),
        transitions=transitions,
    )


def _rename_action(action, rclk, rctr):
    from .machine import Action, CLOCK_COPY, CLOCK_RESET

    if action.kind in (CLOCK_RESET, CLOCK_COPY):
        arg = rclk[action.arg] if action.kind == CLOCK_COPY else action.arg
        return Action(action.kind, rclk[action.name], arg)
    return Action(action.kind, rctr[action.name], action.arg)


def expand_to_event_dfa(defn: FsmDefinition, max_states: int = MAX_EXPANDED_STATES):
    """Unfold clocks/counters into explicit states, yielding a pure event DFA.

    Saturation bounds make the configuration space finite.  Returns
    (configs, step_map, emit_map) where step_map[(config_idx, event_idx)] is
    the successor config index and emit_map the matching emission flag.
    """
    from .table import build_table
    from .. import _table_py

    table = build_table(defn)
    init = (table.init_state, tuple(int(c) for c in table.clock_caps),
            (0,) * len(table.counter_caps))
    configs = {init: 0}
    order = [init]
    step_map = {}
    emit_map = {}
    i = 0
    while i < len(order):
        cfg = order[i]
        for ev in range(9):
            clocks = list(cfg[1])
            counters = list(cfg[2])
            state, emitted = _table_py.step_table(table, cfg[0], clocks, counters, ev)
            nxt = (state, tuple(clocks), tuple(counters))
            if nxt not in configs:
                if len(configs) >= max_states:
                    raise CompileError(
                        f"{defn.machine_id}: expansion exceeds {max_states} states"
                    )
                configs[nxt] = len(order)
                order.append(nxt)
            step_map[(i, ev)] = configs[nxt]
            emit_map[(i, ev)] = emitted
        i += 1
    return order, step_map, emit_map


def _compile_and(expr: And, ce: int, mid: str) -> FsmDefinition:
    """Both patterns must complete, in either order; emission at the window
    where the second one completes, then both re-arm."""
    from ..core import AE_ALPHABET
    from .machine import event_set

    a = compile_pattern(expr.left, ce, mid)
    b = compile_pattern(expr.right, ce, mid)
    _, step_a, emit_a = expand_to_event_dfa(a)
    _, step_b, emit_b = expand_to_event_dfa(b)

    init = ("both", 0, 0)
    names = {init: "P0"}
    order = [init]
    transitions = {}
    i = 0
    while i < len(order):
        node = order[i]
        by_target: dict = {}
        for ev in range(9):
            if node[0] == "both":
                _, qa, qb = node
                na, ea = step_a[(qa, ev)], emit_a[(qa, ev)]
                nb, eb = step_b[(qb, ev)], emit_b[(qb, ev)]
                if ea and eb:
                    nxt, emit = init, True
                elif ea:
                    nxt, emit = ("adone", nb), False
                elif eb:
                    nxt, emit = ("bdone", na), False
                else:
                    nxt, emit = ("both", na, nb), False
            elif node[0] == "adone":
                nb, eb = step_b[(node[1], ev)], emit_b[(node[1], ev)]
                nxt, emit = (init, True) if eb else (("adone", nb), False)
            else:
                na, ea = step_a[(node[1], ev)], emit_a[(node[1], ev)]
                nxt, emit = (init, True) if ea else (("bdone", na), False)
            if nxt not in names:
                if len(order) >= MAX_EXPANDED_STATES:
                    raise CompileError(f"{mid}: AND product exceeds {MAX_EXPANDED_STATES} states")
                names[nxt] = f"P{len(order)}"
                order.append(nxt)
            by_target.setdefault((names[nxt], emit), []).append(AE_ALPHABET[ev])
        trs = []
        for (target, emit), events in by_target.items():
            if target == names[node] and not emit:
                continue  # implicit self-loop
            trs.append(Transition(Guard(event_set(events)), (), target, emit=emit))
        transitions[names[node]] = tuple(trs)
        i += 1
    states = tuple(names[n] for n in order)
    return FsmDefinition(mid, ce, states, "P0", transitions=transitions)


def _fresh_name(base: str, taken) -> str:
    name = base
    while name in taken:
        name = "_" + name
    return name
