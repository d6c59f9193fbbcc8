"""Concurrent labeling: streaming/batch agreement, causality, projection."""

import numpy as np
import pytest

from cedgen.core import AE_ALPHABET, CE_DEFAULT
from cedgen.labeler import (
    LabelSession,
    default_priority,
    label_trace,
    stream_step,
    to_single_label,
)

from conftest import trace_of


def test_label_trace_basic(rules):
    labels = label_trace(rules, trace_of("eat"))
    # a fresh eating session with no recent cleaning is flagged immediately
    assert labels == (frozenset({2}),)


def test_label_trace_multi_rule(rules):
    # sit + 5 clicks completes e10; the working-session rule needs a walk
    labels = label_trace(rules, trace_of("sit click*5"))
    assert labels[-1] == frozenset({10})
    assert all(s == frozenset() for s in labels[:-1])


def test_stream_equals_batch(rules):
    rng = np.random.default_rng(99)
    for _ in range(50):
        trace = tuple(AE_ALPHABET[i] for i in rng.integers(0, 9, size=40))
        batch = label_trace(rules, trace)
        session = LabelSession.start(rules)
        streamed = tuple(stream_step(session, ae) for ae in trace)
        assert streamed == batch


def test_prefix_causality(rules):
    rng = np.random.default_rng(7)
    for _ in range(20):
        trace = tuple(AE_ALPHABET[i] for i in rng.integers(0, 9, size=30))
        full = label_trace(rules, trace)
        for k in range(1, len(trace) + 1):
            assert label_trace(rules, trace[:k]) == full[:k]


def test_session_window_counter(rules):
    session = LabelSession.start(rules)
    for i, ae in enumerate(trace_of("walk sit eat"), start=1):
        stream_step(session, ae)
        assert session.window == i


def test_default_priority():
    assert default_priority() == tuple(range(1, 11))


def test_to_single_label_projection():
    seq = (frozenset(), frozenset({3}), frozenset({2, 7}), frozenset({10, 9}))
    assert to_single_label(seq) == (CE_DEFAULT, 3, 2, 9)


def test_to_single_label_custom_priority():
    seq = (frozenset({2, 7}),)
    assert to_single_label(seq, priority=(7, 2, 1, 3, 4, 5, 6, 8, 9, 10)) == (7,)


def test_to_single_label_empty_sequence():
    assert to_single_label(()) == ()


def test_projection_never_invents_labels(rules):
    rng = np.random.default_rng(21)
    trace = tuple(AE_ALPHABET[i] for i in rng.integers(0, 9, size=60))
    labels = label_trace(rules, trace)
    single = to_single_label(labels)
    for s, y in zip(labels, single):
        if y == CE_DEFAULT:
            assert not s
        else:
            assert y in s
