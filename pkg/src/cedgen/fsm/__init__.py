"""Timed/counting finite-state machines: core model, pattern compiler,
rule-language parser, and the flattened transition-table runtime."""

from .machine import (
    ANY_EVENT,
    Action,
    EventSet,
    FsmDefinition,
    FsmError,
    FsmState,
    Guard,
    Predicate,
    Transition,
    copy_clock,
    event_set,
    inc_counter,
    initial_state,
    reset_clock,
    run,
    set_counter,
    step,
    to_dot,
)
from .pattern import (
    Absent,
    And,
    CompileError,
    Count,
    Dur,
    Gap,
    Seq,
    Step,
    Then,
    Within,
    compile_pattern,
)
from .parser import DslError, DslSyntaxError, UnboundName, parse_pattern, parse_rules

__all__ = [
    "ANY_EVENT", "Action", "EventSet", "FsmDefinition", "FsmError", "FsmState",
    "Guard", "Predicate", "Transition", "copy_clock", "event_set", "inc_counter",
    "initial_state", "reset_clock", "run", "set_counter", "step", "to_dot",
    "Absent", "And", "CompileError", "Count", "Dur", "Gap", "Seq", "Step",
    "Then", "Within", "compile_pattern",
    "DslError", "DslSyntaxError", "UnboundName", "parse_pattern", "parse_rules",
]
