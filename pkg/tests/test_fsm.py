"""Machine model, pattern compiler, and rule-language parser."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cedgen.core import AE_ALPHABET, AtomicEvent as A
from cedgen.fsm import (
    Absent,
    And,
    CompileError,
    Count,
    Dur,
    DslSyntaxError,
    FsmDefinition,
    FsmError,
    Gap,
    Guard,
    Predicate,
    Seq,
    Step,
    Then,
    Transition,
    UnboundName,
    Within,
    compile_pattern,
    event_set,
    initial_state,
    parse_pattern,
    parse_rules,
    run,
    step,
    to_dot,
)

from conftest import trace_of


def emits(defn, trace):
    """1-based windows at which the machine emits."""
    return [i + 1 for i, e in enumerate(run(defn, trace)) if e]


# ---------------------------------------------------------------- event sets

def test_event_set_negation():
    es = event_set([A.WALK, A.SIT], negate=True)
    assert A.WALK not in es.members and A.EAT in es.members
    assert len(es.members) == 7


def test_empty_event_set_rejected():
    defn_kwargs = dict(machine_id="m", ce_class=1, states=("a",), initial="a")
    bad = Transition(Guard(event_set([])), (), "a")
    with pytest.raises(FsmError):
        FsmDefinition(transitions={"a": (bad,)}, **defn_kwargs)


# ---------------------------------------------------------------- combinators

def test_seq_relaxed_order_with_skips():
    expr = Seq((
        Step(event_set([A.SIT])),
        Step(event_set([A.TYPE]), skip=event_set([A.SIT, A.TYPE, A.WALK], negate=True)),
        Step(event_set([A.WALK]), skip=event_set([A.TYPE, A.WALK], negate=True)),
    ))
    defn = compile_pattern(expr, ce=5)
    assert emits(defn, trace_of("sit type walk")) == [3]
    # skip tokens are transparent between steps
    assert emits(defn, trace_of("sit eat type eat walk")) == [5]
    # a non-skippable token resets the partial match
    assert emits(defn, trace_of("sit walk type walk")) == []
    # the machine re-arms after emitting
    assert emits(defn, trace_of("sit type walk sit type walk")) == [3, 6]


def test_dur_consecutive():
    defn = compile_pattern(Dur(event_set([A.WASH]), 6), ce=6)
    assert emits(defn, trace_of("wash*6")) == [6]
    assert emits(defn, trace_of("wash*12")) == [6, 12]
    assert emits(defn, trace_of("wash*5 walk wash*5")) == []


def test_dur_consecutive_with_grace():
    defn = compile_pattern(Dur(event_set([A.WASH]), 4, grace=2), ce=6)
    # one or two gap windows pause but do not break the run
    assert emits(defn, trace_of("wash*2 walk wash*2")) == [5]
    assert emits(defn, trace_of("wash*2 walk walk wash*2")) == [6]
    assert emits(defn, trace_of("wash*2 walk walk walk wash*4")) == [9]


def test_dur_cumulative():
    defn = compile_pattern(Dur(event_set([A.BRUSH]), 4, mode="cumulative"), ce=7)
    assert emits(defn, trace_of("brush*2 walk*3 brush*2")) == [7]
    assert emits(defn, trace_of("brush*8")) == [4, 8]
    assert emits(defn, trace_of("brush*3 walk*20")) == []


def test_dur_validation():
    with pytest.raises(CompileError):
        Dur(event_set([A.WASH]), 0)
    with pytest.raises(CompileError):
        Dur(event_set([A.WASH]), 3, mode="cumulative", grace=1)
    with pytest.raises(CompileError):
        Dur(event_set([A.WASH]), 3, mode="sometimes")


def test_within_bounds_span():
    inner = Seq((
        Step(event_set([A.SIT])),
        Step(event_set([A.TYPE]), skip=event_set([A.SIT, A.TYPE], negate=True)),
    ))
    defn = compile_pattern(Within(inner, 4), ce=5)
    assert emits(defn, trace_of("sit walk walk type")) == [4]
    # the fifth window is one past the allowed span
    assert emits(defn, trace_of("sit walk walk walk type")) == []


def test_gap_minimum_delay():
    defn = compile_pattern(
        Gap(event_set([A.EAT]), event_set([A.TYPE, A.CLICK]), min_n=4), ce=8)
    assert emits(defn, trace_of("eat sit*3 type")) == [5]
    assert emits(defn, trace_of("eat sit sit type")) == []
    # an early work window spends the opportunity without emitting
    assert emits(defn, trace_of("eat sit type sit*5 click")) == []


def test_count_exact_with_arm_disarm():
    defn = compile_pattern(
        Count(event_set([A.CLICK]), 5, exact=True,
              arm=event_set([A.SIT]), disarm=event_set([A.WALK])), ce=10)
    assert emits(defn, trace_of("sit click*5")) == [6]
    # exact: extra clicks after the fifth do not re-fire
    assert emits(defn, trace_of("sit click*10")) == [6]
    assert emits(defn, trace_of("sit click*3 walk click*2")) == []
    # re-arming resets the count
    assert emits(defn, trace_of("sit click*3 sit click*5")) == [10]


def test_count_unarmed_counts_from_start():
    defn = compile_pattern(Count(event_set([A.CLICK]), 3), ce=10)
    assert emits(defn, trace_of("click walk click click")) == [4]


def test_absent_violation_and_satisfaction():
    expr = Absent(
        required=Dur(event_set([A.WASH]), 4),
        trigger=event_set([A.FLUSH_TOILET]),
        violation=event_set([A.TYPE, A.CLICK]),
    )
    defn = compile_pattern(expr, ce=1)
    assert emits(defn, trace_of("flush_toilet type")) == [2]
    assert emits(defn, trace_of("flush_toilet wash*4 type")) == []
    assert emits(defn, trace_of("flush_toilet wash*3 type")) == [5]
    # untriggered work windows never violate
    assert emits(defn, trace_of("type click type")) == []


def test_absent_lookback_reopens():
    expr = Absent(
        required=Dur(event_set([A.WASH]), 2),
        trigger=event_set([A.FLUSH_TOILET]),
        violation=event_set([A.TYPE]),
        lookback=3,
    )
    defn = compile_pattern(expr, ce=1)
    # satisfied recently: the next trigger-free work window is safe
    assert emits(defn, trace_of("flush_toilet wash wash type")) == []
    # but satisfaction expires after the lookback horizon
    assert emits(defn, trace_of("flush_toilet wash wash sit*4 flush_toilet type")) == [9]


def test_then_sequencing():
    expr = Then(
        Dur(event_set([A.WASH]), 2),
        Dur(event_set([A.BRUSH]), 2),
    )
    defn = compile_pattern(expr, ce=4)
    assert emits(defn, trace_of("wash wash brush brush")) == [4]
    assert emits(defn, trace_of("brush brush wash wash")) == []
    # the second phase's counters start fresh after the hand-off
    assert emits(defn, trace_of("brush wash wash brush brush")) == [5]


def test_and_product():
    expr = And(
        Dur(event_set([A.WASH]), 2),
        Count(event_set([A.BRUSH]), 2),
    )
    defn = compile_pattern(expr, ce=4)
    # completes when the later of the two branches completes
    assert emits(defn, trace_of("wash wash brush brush")) == [4]
    assert emits(defn, trace_of("brush brush wash wash")) == [4]
    assert emits(defn, trace_of("brush wash wash")) == []


# ---------------------------------------------------------------- parser

def test_parse_pattern_expressions():
    for src in (
        "SEQ(sit; type skip !{sit, type}; walk)",
        "DUR(wash, 6, consecutive)",
        "DUR(brush, 24, cumulative)",
        "WITHIN(SEQ(sit; type), 4)",
        "GAP(eat, {type, click}, min = 36)",
        "COUNT(click, 5, exact, arm = sit, disarm = walk)",
        "ABSENT(DUR(wash, 4, consecutive), trigger = flush_toilet, violation = {type, click})",
    ):
        defn = parse_pattern(src)
        assert isinstance(defn, FsmDefinition)


def test_parsed_pattern_equals_api_pattern():
    parsed = parse_pattern("DUR(wash, 6, consecutive)")
    api = compile_pattern(Dur(event_set([A.WASH]), 6), ce=0)
    t = trace_of("wash*12")
    assert run(parsed, t) == run(api, t)


def test_parse_machine_block():
    src = """machine demo
        states IDLE HOT
        clocks age
        on IDLE wash -> HOT do reset age
        on HOT wash if age <= 2 -> IDLE emit
        on HOT !wash -> IDLE
    end"""
    defn = parse_pattern(src)
    assert defn.states == ("IDLE", "HOT")
    assert emits(defn, trace_of("wash wash")) == [2]


def test_parser_syntax_error_position():
    with pytest.raises(DslSyntaxError) as exc:
        parse_pattern("DUR(wash 6)")
    assert exc.value.line == 1
    assert exc.value.col > 0


def test_parser_unbound_clock():
    src = """machine demo
        states A
        on A wash if age <= 2 -> A
    end"""
    with pytest.raises(UnboundName) as exc:
        parse_pattern(src)
    assert exc.value.name == "age"


def test_parser_unknown_event_token():
    with pytest.raises((DslSyntaxError, UnboundName)):
        parse_pattern("DUR(jump, 6, consecutive)")


def test_parse_rules_file():
    text = """
    ce e1 "washing" pattern DUR(wash, 6, consecutive)
    ce e2 "clicking" pattern COUNT(click, 3)
    """
    parsed = parse_rules(text)
    assert sorted(parsed) == [1, 2]
    name, defn, src = parsed[1]
    assert name == "washing"
    assert defn.ce_class == 1
    assert "DUR" in src


# ---------------------------------------------------------------- runtime

def test_step_fold_equals_run(rules):
    trace = trace_of("sit click*5 walk wash*6 eat type")
    for defn in rules.rules.values():
        st = initial_state(defn)
        folded = []
        for ae in trace:
            st, emitted = step(defn, st, ae)
            folded.append(emitted)
        assert folded == [bool(x) for x in run(defn, trace)]
        assert st.window == len(trace)


def test_clocks_start_stale():
    defn = parse_pattern("""machine demo
        states A
        clocks age
        on A wash if age <= 3 -> A emit
        on A wash -> A do reset age
    end""")
    # the age guard must not hold before any reset has happened
    assert emits(defn, trace_of("wash wash")) == [2]


def test_to_dot_stable_and_complete(rules):
    defn = rules.rules[6]
    dot = to_dot(defn)
    assert dot == to_dot(defn)
    assert dot.startswith("digraph")
    for s in defn.states:
        assert f'"{s}"' in dot
    assert "emit e6" in dot


# ---------------------------------------------------------------- properties

event_idx = st.integers(min_value=0, max_value=len(AE_ALPHABET) - 1)
traces = st.lists(event_idx, min_size=1, max_size=40).map(
    lambda ix: tuple(AE_ALPHABET[i] for i in ix))


@settings(max_examples=60, deadline=None)
@given(traces, st.integers(min_value=1, max_value=10))
def test_determinism(trace, ce):
    from cedgen.rules import builtin_rules
    defn = builtin_rules().rules[ce]
    assert run(defn, trace) == run(defn, trace)


@settings(max_examples=60, deadline=None)
@given(traces, st.integers(min_value=1, max_value=10), st.data())
def test_prefix_causality(trace, ce, data):
    from cedgen.rules import builtin_rules
    defn = builtin_rules().rules[ce]
    k = data.draw(st.integers(min_value=1, max_value=len(trace)))
    full = run(defn, trace)
    assert run(defn, trace[:k]) == full[:k]


@settings(max_examples=60, deadline=None)
@given(traces, st.integers(min_value=1, max_value=10))
def test_bounded_memory(trace, ce):
    from cedgen.rules import builtin_rules
    defn = builtin_rules().rules[ce]
    ccap, ncap = defn.caps()
    st_ = initial_state(defn)
    for ae in trace:
        st_, _ = step(defn, st_, ae)
        for name, v in zip(defn.clocks, st_.clock_values):
            assert 0 <= v <= ccap[name]
        for name, v in zip(defn.counters, st_.counter_values):
            assert 0 <= v <= ncap[name]


@settings(max_examples=60, deadline=None)
@given(traces, st.integers(min_value=1, max_value=10))
def test_one_window_one_step(trace, ce):
    from cedgen.rules import builtin_rules
    defn = builtin_rules().rules[ce]
    st_ = initial_state(defn)
    for i, ae in enumerate(trace, start=1):
        st_, _ = step(defn, st_, ae)
        assert st_.window == i
        assert st_.state in defn.states
