"""Line-oriented rule DSL: pattern expressions plus raw ``machine`` blocks.

Grammar (``#`` starts a comment)::

    file      := (ce_decl)*
    ce_decl   := "ce" ID STRING ( "pattern" expr | machine_block )
    expr      := "SEQ(" step (";" step)* ")"
               | "DUR(" set "," INT "," ("consecutive"|"cumulative") ["," "grace" "=" INT] ")"
               | "WITHIN(" expr "," INT ")"
               | "GAP(" set "," set "," "min" "=" INT ")"
               | "COUNT(" set "," INT ["," "exact"] ["," "arm" "=" set] ["," "disarm" "=" set] ")"
               | "ABSENT(" expr "," "trigger" "=" set "," "violation" "=" set ["," "lookback" "=" INT] ")"
    step      := set ["skip" set]
    set       := "{" ID ("," ID)* "}" | "!" set | ID

A ``machine`` block runs to a closing ``end``, one construct per line::

    states ID+            # first listed is initial
    clocks ID* / counters ID*
    on SRC set ["if" PRED ("&" PRED)*] "->" DST ["do" ACT ("," ACT)*] ["emit"]
    PRED := ID ("<"|"<="|"="|"=="|">="|">") INT
    ACT  := "reset" clock | "copy" clock clock | "set" counter INT | "inc" counter

All integer bounds are window counts.
"""

from __future__ import annotations

import re

from ..core import UnknownToken, parse_ae_token
from .machine import (
    ANY_EVENT,
    FsmDefinition,
    Guard,
    Predicate,
    Transition,
    copy_clock,
    event_set,
    inc_counter,
    reset_clock,
    set_counter,
)
from .pattern import (
    Absent,
    And,
    Count,
    Dur,
    Gap,
    Seq,
    Step,
    Then,
    Within,
    compile_pattern,
)


class DslError(ValueError):
    """Base for every rule-language front-end failure."""


class DslSyntaxError(DslError):
    def __init__(self, line: int, col: int, expected: str):
        super().__init__(f"line {line}, col {col}: expected {expected}")
        self.line = line
        self.col = col
        self.expected = expected


class UnboundName(DslError):
    def __init__(self, line: int, name: str, kind: str):
        super().__init__(f"line {line}: undeclared {kind} {name!r}")
        self.name = name
        self.kind = kind


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<string>"[^"]*")
      | (?P<int>\d+)
      | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op><=|>=|==|->|[(){},;!=<>&])
    )""",
    re.VERBOSE,
)


class _Tokens:
    """Token stream over (possibly multi-line) text with position tracking."""

    def __init__(self, text: str, start_line: int = 1):
        self.toks = []
        for ln, raw in enumerate(text.split("\n"), start=start_line):
            line = raw.split("#", 1)[0]
            pos = 0
            while pos < len(line):
                m = _TOKEN_RE.match(line, pos)
                if m is None or m.lastgroup is None:
                    if line[pos:].strip():
                        raise DslSyntaxError(ln, pos + 1, "a valid token")
                    break
                self.toks.append((m.lastgroup, m.group(m.lastgroup), ln, m.start(m.lastgroup) + 1))
                pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, expected: str):
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else (None, None, 1, 1)
            raise DslSyntaxError(last[2], last[3], expected)
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None):
        tok = self.next(value or kind)
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise DslSyntaxError(tok[2], tok[3], value or kind)
        return tok

    def accept(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok and tok[0] == kind and (value is None or tok[1] == value):
            self.i += 1
            return tok
        return None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)


def _event_of(tok):
    try:
        return parse_ae_token(tok[1])
    except UnknownToken:
        raise UnboundName(tok[2], tok[1], "atomic event") from None


def _parse_set(ts: _Tokens):
    if ts.accept("op", "!"):
        return _negate(_parse_set(ts))
    if ts.accept("op", "{"):
        toks = [ts.expect("id")]
        while ts.accept("op", ","):
            toks.append(ts.expect("id"))
        ts.expect("op", "}")
        return event_set(_event_of(t) for t in toks)
    return event_set([_event_of(ts.expect("id"))])


def _negate(es):
    return event_set(es.members, negate=True)


def _parse_int(ts: _Tokens) -> int:
    tok = ts.expect("int")
    return int(tok[1])


def _parse_kw_eq(ts: _Tokens, keyword: str) -> None:
    ts.expect("id", keyword)
    ts.expect("op", "=")


def parse_expr(ts: _Tokens):
    tok = ts.expect("id")
    head = tok[1]
    ts.expect("op", "(")
    if head == "SEQ":
        steps = [_parse_step(ts)]
        while ts.accept("op", ";"):
            steps.append(_parse_step(ts))
        ts.expect("op", ")")
        return Seq(tuple(steps))
    if head == "DUR":
        events = _parse_set(ts)
        ts.expect("op", ",")
        n = _parse_int(ts)
        ts.expect("op", ",")
        mode = ts.expect("id")[1]
        grace = 0
        if ts.accept("op", ","):
            _parse_kw_eq(ts, "grace")
            grace = _parse_int(ts)
        ts.expect("op", ")")
        return Dur(events, n, mode, grace)
    if head == "WITHIN":
        inner = parse_expr(ts)
        ts.expect("op", ",")
        n = _parse_int(ts)
        ts.expect("op", ")")
        return Within(inner, n)
    if head == "GAP":
        after = _parse_set(ts)
        ts.expect("op", ",")
        before = _parse_set(ts)
        ts.expect("op", ",")
        _parse_kw_eq(ts, "min")
        min_n = _parse_int(ts)
        ts.expect("op", ")")
        return Gap(after, before, min_n)
    if head == "COUNT":
        events = _parse_set(ts)
        ts.expect("op", ",")
        n = _parse_int(ts)
        exact = False
        arm = disarm = None
        while ts.accept("op", ","):
            key = ts.expect("id")
            if key[1] == "exact":
                exact = True
            elif key[1] == "arm":
                ts.expect("op", "=")
                arm = _parse_set(ts)
            elif key[1] == "disarm":
                ts.expect("op", "=")
                disarm = _parse_set(ts)
            else:
                raise DslSyntaxError(key[2], key[3], "exact, arm or disarm")
        ts.expect("op", ")")
        return Count(events, n, exact, arm, disarm)
    if head == "ABSENT":
        required = parse_expr(ts)
        ts.expect("op", ",")
        _parse_kw_eq(ts, "trigger")
        trigger = _parse_set(ts)
        ts.expect("op", ",")
        _parse_kw_eq(ts, "violation")
        violation = _parse_set(ts)
        lookback = None
        if ts.accept("op", ","):
            _parse_kw_eq(ts, "lookback")
            lookback = _parse_int(ts)
        ts.expect("op", ")")
        return Absent(required, trigger, violation, lookback)
    raise DslSyntaxError(tok[2], tok[3], "SEQ, DUR, WITHIN, GAP, COUNT or ABSENT")


def _parse_step(ts: _Tokens) -> Step:
    events = _parse_set(ts)
    skip = None
    if ts.accept("id", "skip"):
        skip = _parse_set(ts)
    return Step(events, skip)


def _parse_expr_text(text: str, start_line: int = 1):
    ts = _Tokens(text, start_line)
    expr = parse_expr(ts)
    if not ts.at_end():
        tok = ts.peek()
        raise DslSyntaxError(tok[2], tok[3], "end of expression")
    return expr


def parse_pattern(text: str, start_line: int = 1, ce_class: int = 0):
    """Compile a bare expression or a raw machine block (``machine ... end``).

    Returns the resulting :class:`FsmDefinition` either way; standalone
    patterns get CE class 0 unless told otherwise.
    """
    stripped = [ln.split("#", 1)[0].strip() for ln in text.split("\n")]
    first = next((s for s in stripped if s), "")
    if first == "machine" or first.startswith("machine "):
        lines = text.split("\n")
        idx = next(i for i, s in enumerate(stripped) if s)
        head = first.split()
        mid = head[1] if len(head) > 1 else "machine"
        defn, _ = _parse_machine(lines[idx + 1:], start_line + idx + 1,
                                 machine_id=mid, ce_class=ce_class)
        return defn
    return compile_pattern(_parse_expr_text(text, start_line), ce_class)


_OP_ALIASES = {"=": "==", "<": "<", "<=": "<=", "==": "==", ">=": ">=", ">": ">"}


def _parse_machine(lines, start_line: int, machine_id: str, ce_class: int):
    """Parse machine-block construct lines up to ``end``."""
    states: list[str] = []
    initial: str | None = None
    clocks: list[str] = []
    counters: list[str] = []
    raw_transitions: list = []
    consumed = 0
    closed = False

    for offset, raw in enumerate(lines):
        consumed = offset + 1
        ln = start_line + offset
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "end":
            closed = True
            break
        ts = _Tokens(line, ln)
        head = ts.expect("id")
        if head[1] == "states":
            while not ts.at_end():
                states.append(ts.expect("id")[1])
        elif head[1] == "initial":
            initial = ts.expect("id")[1]
        elif head[1] == "clocks":
            while not ts.at_end():
                clocks.append(ts.expect("id")[1])
        elif head[1] == "counters":
            while not ts.at_end():
                counters.append(ts.expect("id")[1])
        elif head[1] == "on":
            raw_transitions.append(_parse_on(ts, ln, clocks, counters))
        else:
            raise DslSyntaxError(head[2], head[3],
                                 "states, initial, clocks, counters, on or end")
    if not closed:
        raise DslSyntaxError(start_line + len(lines), 1, "end")
    if not states:
        raise DslSyntaxError(start_line, 1, "a states declaration")

    transitions: dict = {s: [] for s in states}
    for src, tr, ln in raw_transitions:
        if src not in transitions:
            raise UnboundName(ln, src, "state")
        if tr.target not in transitions:
            raise UnboundName(ln, tr.target, "state")
        transitions[src].append(tr)
    defn = FsmDefinition(
        machine_id=machine_id,
        ce_class=ce_class,
        states=tuple(states),
        initial=initial or states[0],
        clocks=tuple(clocks),
        counters=tuple(counters),
        transitions={s: tuple(trs) for s, trs in transitions.items()},
    )
    return defn, consumed


def _parse_on(ts: _Tokens, ln: int, clocks, counters):
    src = ts.expect("id")[1]
    tok = ts.peek()
    if tok and tok[0] == "id" and tok[1] == "any":
        ts.next("any")
        events = ANY_EVENT
    else:
        events = _parse_set(ts)
    clock_preds: list[Predicate] = []
    counter_preds: list[Predicate] = []
    if ts.accept("id", "if"):
        while True:
            name_tok = ts.expect("id")
            op_tok = ts.next("comparator")
            if op_tok[1] not in _OP_ALIASES:
                raise DslSyntaxError(op_tok[2], op_tok[3], "a comparator")
            const = _parse_int(ts)
            pred = Predicate(name_tok[1], _OP_ALIASES[op_tok[1]], const)
            if name_tok[1] in clocks:
                clock_preds.append(pred)
            elif name_tok[1] in counters:
                counter_preds.append(pred)
            else:
                raise UnboundName(ln, name_tok[1], "clock or counter")
            if not ts.accept("op", "&"):
                break
    ts.expect("op", "->")
    target = ts.expect("id")[1]
    actions = []
    if ts.accept("id", "do"):
        while True:
            kind = ts.expect("id")
            if kind[1] == "reset":
                name = ts.expect("id")[1]
                if name not in clocks:
                    raise UnboundName(ln, name, "clock")
                actions.append(reset_clock(name))
            elif kind[1] == "copy":
                dst = ts.expect("id")[1]
                src_clock = ts.expect("id")[1]
                for name in (dst, src_clock):
                    if name not in clocks:
                        raise UnboundName(ln, name, "clock")
                actions.append(copy_clock(dst, src_clock))
            elif kind[1] == "set":
                name = ts.expect("id")[1]
                if name not in counters:
                    raise UnboundName(ln, name, "counter")
                actions.append(set_counter(name, _parse_int(ts)))
            elif kind[1] == "inc":
                name = ts.expect("id")[1]
                if name not in counters:
                    raise UnboundName(ln, name, "counter")
                actions.append(inc_counter(name))
            else:
                raise DslSyntaxError(kind[2], kind[3], "reset, copy, set or inc")
            if not ts.accept("op", ","):
                break
    emit = bool(ts.accept("id", "emit"))
    if not ts.at_end():
        tok = ts.peek()
        raise DslSyntaxError(tok[2], tok[3], "end of transition")
    guard = Guard(events, tuple(clock_preds), tuple(counter_preds))
    return src, Transition(guard, tuple(actions), target, emit), ln


def parse_rules(text: str) -> dict:
    """Parse a rules file: maps CE id -> (display name, FsmDefinition, source).

    Pattern declarations are compiled immediately; machine blocks are taken
    as-is.  The per-rule DSL source is preserved for provenance.
    """
    lines = text.split("\n")
    out: dict = {}
    i = 0
    while i < len(lines):
        line = lines[i].split("#", 1)[0].strip()
        if not line:
            i += 1
            continue
        ts = _Tokens(line, i + 1)
        ts.expect("id", "ce")
        ce_tok = ts.expect("id")
        m = re.fullmatch(r"e(\d+)", ce_tok[1])
        if not m or not 1 <= int(m.group(1)) <= 10:
            raise DslSyntaxError(ce_tok[2], ce_tok[3], "a CE id e1..e10")
        ce = int(m.group(1))
        name = ts.expect("string")[1][1:-1]
        form = ts.expect("id")
        if form[1] == "pattern":
            rest = line[line.index("pattern") + len("pattern"):]
            src_lines = [lines[i]]
            expr_text = rest
            while expr_text.count("(") > expr_text.count(")") or not expr_text.strip():
                i += 1
                if i >= len(lines):
                    raise DslSyntaxError(len(lines), 1, ")")
                src_lines.append(lines[i])
                expr_text += "\n" + lines[i].split("#", 1)[0]
            defn = compile_pattern(_parse_expr_text(expr_text.strip()), ce)
            out[ce] = (name, defn, "\n".join(src_lines))
            i += 1
        elif form[1] == "machine":
            defn, consumed = _parse_machine(lines[i + 1:], i + 2,
                                            machine_id=f"e{ce}", ce_class=ce)
            src = "\n".join(lines[i:i + 1 + consumed])
            out[ce] = (name, defn, src)
            i += 1 + consumed
        else:
            raise DslSyntaxError(form[2], form[3], "pattern or machine")
    return out
