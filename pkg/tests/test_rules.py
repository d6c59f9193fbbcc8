"""Built-in rules: hand-derived golden fixtures plus machine/oracle agreement.

Every fixture's expected emission windows (1-based) were worked out by hand
from the rule statement; each is asserted against the compiled machine AND
the independent procedural interpreter, so a fixture failure localizes the
bug to one side.
"""

import numpy as np
import pytest

from cedgen.core import AE_ALPHABET
from cedgen.fsm import machine
from cedgen.rules import builtin_rules, builtin_source, load_rules
from cedgen.rules.reference import UnsupportedClass, reference_label

from conftest import trace_of

# (ce, trace literal, expected 1-based emission windows)
GOLDEN = [
    # e1: work (type/click) after flush_toilet without 4 consecutive washes
    (1, "flush_toilet type", [2]),                       # zero-wash violation
    (1, "flush_toilet wash*4 type", []),                 # fully washed
    (1, "flush_toilet wash*3 type", [5]),                # one wash short
    (1, "flush_toilet walk walk type", [4]),             # fillers don't wash
    (1, "type click type", []),                          # never triggered
    # e2: starting to eat/drink without a 4-wash block in the last ~2 minutes
    (2, "eat", [1]),                                     # fresh session, no clean
    (2, "eat eat walk eat", [1, 4]),                     # session exit + re-entry
    (2, "wash*4 eat", []),                               # just cleaned
    (2, "wash*4 walk*20 eat", []),                       # clean still recent
    (2, "wash*4 walk*21 eat", [26]),                     # clean too old
    # e3: brushing session ends (3 non-brush windows) before 2 min cumulative
    (3, "brush walk walk walk", [4]),
    (3, "brush walk brush walk walk walk", [6]),         # gap shorter than 3 resets
    (3, "brush*24 walk walk walk", []),                  # adequate -> silent
    (3, "brush*23 walk walk walk", [26]),                # one window short
    (3, "walk sit eat", []),                             # never brushed
    # e4: brush then both eat and drink, either order, fillers allowed
    (4, "brush eat drink", [3]),
    (4, "brush drink eat", [3]),
    (4, "brush eat walk drink", [4]),
    (4, "brush eat brush drink", []),                    # re-brush restarts
    (4, "eat drink", []),
    # e5: sit, then work (type/click), then walk
    (5, "sit type walk", [3]),
    (5, "sit eat click sit walk", [5]),                  # fillers between steps
    (5, "sit walk", []),                                 # walk before any work
    (5, "type walk", []),                                # never sat
    (5, "sit type walk sit click walk", [3, 6]),         # re-arms after firing
    # e6: 6 consecutive wash windows (30 s)
    (6, "wash*6", [6]),
    (6, "wash*12", [6, 12]),                             # double fire
    (6, "wash*5 walk wash*5", []),                       # a gap breaks the run
    # e7: 24 cumulative brush windows (2 min), pauses allowed
    (7, "brush*24", [24]),
    (7, "brush*12 walk*5 brush*12", [29]),
    (7, "brush*23 walk*30", []),
    (7, "brush*48", [24, 48]),                           # total resets after firing
    # e8: work at least 3 min after eating; early work spends the chance
    (8, "eat sit*36 type", [38]),
    (8, "eat sit*35 type", [37]),                        # exact 36-window gap
    (8, "eat sit*34 type", []),                          # one window early
    (8, "eat sit*10 type sit*30 click", []),             # spent by the early work
    # e9: three typing-session starts within 60 s
    (9, "type walk type walk type", [5]),
    (9, "type walk*5 type walk*5 type", [13]),           # span exactly 12 windows
    (9, "type walk*5 type walk*6 type", []),             # span 13: first start ages out
    (9, "type type type", []),                           # one long session, one start
    (9, "type walk*5 type walk*6 type walk*5 type walk type", [22]),
    # e10: exactly 5 clicks after sitting, walking disarms
    (10, "sit click*5", [6]),
    (10, "sit click*10", [6]),                           # exact: no sixth-click refire
    (10, "sit click*3 walk click*2", []),
    (10, "sit eat click*5", [7]),                        # non-walk fillers are fine
    (10, "sit click*3 sit click*5", [10]),               # re-sit restarts the count
]


def _windows(flags):
    return [i + 1 for i, f in enumerate(flags) if f]


@pytest.mark.parametrize("ce,literal,expected", GOLDEN,
                         ids=[f"e{ce}-{i}" for i, (ce, _, _) in enumerate(GOLDEN)])
def test_golden_fixture(rules, ce, literal, expected):
    trace = trace_of(literal)
    compiled = _windows(machine.run(rules.rules[ce], trace))
    oracle = _windows(reference_label(ce, trace))
    assert compiled == expected, f"compiled machine disagrees on {literal!r}"
    assert oracle == expected, f"reference interpreter disagrees on {literal!r}"


def test_every_class_has_three_fixture_kinds():
    per_class = {}
    for ce, _, expected in GOLDEN:
        per_class.setdefault(ce, []).append(bool(expected))
    for ce in range(1, 11):
        kinds = per_class[ce]
        assert len(kinds) >= 3
        assert any(kinds) and not all(kinds), f"e{ce} needs positive and negative"


def test_oracle_equivalence_random_traces(rules):
    rng = np.random.default_rng(1234)
    for _ in range(300):
        trace = tuple(AE_ALPHABET[i] for i in rng.integers(0, 9, size=60))
        for ce in rules.classes:
            got = [bool(x) for x in machine.run(rules.rules[ce], trace)]
            assert got == reference_label(ce, trace), f"e{ce} diverged"


def test_rule_set_shape(rules):
    assert rules.classes == tuple(range(1, 11))
    assert len(rules.digest()) == 64
    for ce in rules.classes:
        assert rules.names[ce]
        assert rules.provenance[ce].strip()


def test_builtin_source_reloads_identically(rules):
    again = load_rules(builtin_source())
    assert again.digest() == rules.digest()
    trace = trace_of("sit click*5 wash*6 brush*3 eat type")
    for ce in rules.classes:
        assert machine.run(again.rules[ce], trace) == machine.run(rules.rules[ce], trace)


def test_reference_rejects_unknown_class():
    with pytest.raises(UnsupportedClass):
        reference_label(11, trace_of("walk"))
