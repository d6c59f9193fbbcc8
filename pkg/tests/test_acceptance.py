"""Top-level acceptance battery.

Each test prints one ``ACCEPTANCE <n> ... PASS/FAIL`` line (run with ``-s``
to see them) and pins its tolerances inline.
"""

import functools
import itertools
import math
import time

import numpy as np
import pytest

from cedgen.core import AE_ALPHABET, AtomicEvent as A
from cedgen.fsm import machine
from cedgen.labeler import LabelSession, label_trace, stream_step
from cedgen.metrics import (
    FocalLossParams,
    PredictionRecord,
    coarse_f1,
    conditional_f1,
    focal_loss,
    length_accuracy,
    positive_f1,
    window_f1,
)
from cedgen.rules import builtin_rules
from cedgen.rules.reference import reference_label
from cedgen.simulate import (
    GenerationConfig,
    default_transition_model,
    generate_dataset,
    model_to_text,
    sample_trace,
)


def acceptance(num, title):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {num} ({title}): FAIL")
                raise
            print(f"ACCEPTANCE {num} ({title}): PASS")
        return wrapper
    return deco


@pytest.fixture(scope="module")
def train_split():
    """The full default train regime, generated once and timed."""
    rules = builtin_rules()
    cfg = GenerationConfig(num_traces=10000, trace_len=60, seed=7)
    t0 = time.monotonic()
    records = generate_dataset(rules, cfg)
    elapsed = time.monotonic() - t0
    return records, elapsed


#: 4-token sub-alphabets that exercise each rule's triggers, satisfiers,
#: violators, and a neutral filler.
SUB_ALPHABETS = {
    1: (A.FLUSH_TOILET, A.WASH, A.TYPE, A.WALK),
    2: (A.EAT, A.WASH, A.SIT, A.WALK),
    3: (A.BRUSH, A.WALK, A.SIT, A.EAT),
    4: (A.BRUSH, A.EAT, A.DRINK, A.WALK),
    5: (A.SIT, A.TYPE, A.WALK, A.EAT),
    6: (A.WASH, A.WALK, A.SIT, A.EAT),
    7: (A.BRUSH, A.WALK, A.SIT, A.EAT),
    8: (A.EAT, A.TYPE, A.SIT, A.WALK),
    9: (A.TYPE, A.WALK, A.SIT, A.EAT),
    10: (A.SIT, A.CLICK, A.WALK, A.EAT),
}


@acceptance(1, "oracle equivalence")
def test_oracle_equivalence():
    rules = builtin_rules()
    t0 = time.monotonic()
    # (a) exhaustive enumeration, lengths 1..6 over per-rule sub-alphabets
    for ce, alpha in SUB_ALPHABETS.items():
        defn = rules.rules[ce]
        for L in range(1, 7):
            for combo in itertools.product(alpha, repeat=L):
                got = [bool(x) for x in machine.run(defn, combo)]
                assert got == reference_label(ce, combo), \
                    f"e{ce} mismatch on {[a.value for a in combo]}"
    # (b) 10,000 random length-60 traces over the full alphabet
    rng = np.random.default_rng(2718)
    for _ in range(10_000):
        trace = tuple(AE_ALPHABET[i] for i in rng.integers(0, 9, size=60))
        for ce in rules.classes:
            got = [bool(x) for x in machine.run(rules.rules[ce], trace)]
            assert got == reference_label(ce, trace), f"e{ce} mismatch"
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0, f"oracle sweep took {elapsed:.1f}s (limit 120s)"


@acceptance(2, "golden fixtures")
def test_golden_fixtures():
    from test_rules import GOLDEN, _windows
    from conftest import trace_of

    rules = builtin_rules()
    per_class = {}
    for ce, literal, expected in GOLDEN:
        trace = trace_of(literal)
        assert _windows(machine.run(rules.rules[ce], trace)) == expected, literal
        per_class.setdefault(ce, 0)
        per_class[ce] += 1
    assert all(per_class[ce] >= 3 for ce in range(1, 11))
    # the two named boundary cases
    assert _windows(machine.run(rules.rules[6], trace_of("wash*12"))) == [6, 12]
    assert _windows(machine.run(rules.rules[1], trace_of("flush_toilet type"))) == [2]


@acceptance(3, "simulator statistics")
def test_simulator_statistics():
    model = default_transition_model()
    rng = np.random.default_rng(31)
    flushes = washes = 0
    trace = sample_trace(model, 300_000, rng)
    for prev, cur in zip(trace, trace[1:]):
        if prev is A.FLUSH_TOILET:
            flushes += 1
            washes += cur is A.WASH
    assert flushes >= 10_000, f"only {flushes} flush transitions observed"
    ratio = washes / flushes
    assert 0.68 <= ratio <= 0.72, f"P(wash|flush_toilet) = {ratio:.4f}"
    # every serialized row sums to 1 within 1e-9
    from cedgen.simulate import model_from_text
    again = model_from_text(model_to_text(model))
    assert np.abs(again.matrix.sum(axis=1) - 1.0).max() <= 1e-9
    assert abs(again.initial.sum() - 1.0) <= 1e-9


@acceptance(4, "scale and determinism")
def test_scale_and_determinism(train_split, tmp_path):
    from cedgen import dataset_io
    from cedgen.cli import PRESETS

    records, elapsed = train_split
    assert len(records) == 10_000
    assert all(len(r.ae_seq) == 60 for r in records)
    assert elapsed < 60.0, f"train generation took {elapsed:.1f}s (limit 60s)"
    # byte-identical across two serializations of two independent runs
    rules = builtin_rules()
    cfg = GenerationConfig(num_traces=100, trace_len=60, seed=7)
    p1, p2 = str(tmp_path / "a.ced.jsonl"), str(tmp_path / "b.ced.jsonl")
    dataset_io.write_records(p1, generate_dataset(rules, cfg))
    dataset_io.write_records(p2, generate_dataset(rules, cfg))
    assert open(p1, "rb").read() == open(p2, "rb").read()
    # out-of-distribution presets stretch the records as declared
    for preset, want_T in (("ood15", 180), ("ood30", 360)):
        _, T, stretch = PRESETS[preset]
        assert T == want_T
        model = default_transition_model(dwell_stretch=stretch)
        sample = generate_dataset(
            rules, GenerationConfig(num_traces=20, trace_len=T, seed=7), model)
        assert all(len(r.ae_seq) == want_T for r in sample)


@acceptance(5, "sparsity and coverage")
def test_sparsity_and_coverage(train_split):
    records, _ = train_split
    total = sum(len(r.ce_labels) for r in records)
    nonempty = sum(1 for r in records for s in r.ce_labels if s)
    fraction = nonempty / total
    assert fraction < 0.10, f"{fraction:.3%} of windows labeled (limit 10%)"
    seen = set()
    for r in records:
        for s in r.ce_labels:
            seen |= s
    assert seen == set(range(1, 11)), f"classes missing at seed 7: {sorted(set(range(1, 11)) - seen)}"


@acceptance(6, "causality")
def test_causality():
    rules = builtin_rules()
    rng = np.random.default_rng(606)
    for _ in range(1000):
        trace = tuple(AE_ALPHABET[i] for i in rng.integers(0, 9, size=60))
        batch = label_trace(rules, trace)
        session = LabelSession.start(rules)
        for t, ae in enumerate(trace):
            # the streamed label for window t uses only windows 1..t, so
            # matching the full-trace label at every t covers every prefix
            assert stream_step(session, ae) == batch[t]


@acceptance(7, "metric sanity")
def test_metric_sanity():
    perfect = [
        PredictionRecord("a", (0, 3, 0), (frozenset(), frozenset({3}), frozenset())),
        PredictionRecord("b", (6, 0), (frozenset({6}), frozenset())),
    ]
    assert length_accuracy(perfect) == 1.0
    for ce in (3, 6):
        assert conditional_f1(perfect, ce) == 1.0
        assert coarse_f1(perfect, ce) == 1.0
        assert window_f1(perfect, ce) == 1.0
    score, _ = positive_f1(perfect)
    assert score == 1.0

    all_default = [PredictionRecord("a", (0, 0, 0),
                                    (frozenset(), frozenset({4}), frozenset()))]
    score, _ = positive_f1(all_default)
    assert score == 0.0

    mismatched = [PredictionRecord("a", (3,), (frozenset({3}), frozenset()))]
    assert conditional_f1(mismatched, 3) is None
    assert length_accuracy(mismatched) == 0.0


@acceptance(8, "focal loss")
def test_focal_loss_contract():
    rng = np.random.default_rng(88)
    # gamma=0, alpha=1 reduces to the negative log-likelihood (tol 1e-9)
    plain = FocalLossParams(gamma=0.0, alpha={y: 1.0 for y in range(11)})
    for _ in range(50):
        T = int(rng.integers(1, 30))
        probs = rng.dirichlet(np.ones(11), size=T)
        labels = [int(y) for y in rng.integers(0, 11, size=T)]
        nll = -sum(math.log(probs[t][y]) for t, y in enumerate(labels))
        assert abs(focal_loss(probs, labels, plain) - nll) <= 1e-9
    # the pinned single-window value (tol 1e-12)
    params = FocalLossParams(gamma=2.0, alpha={1: 0.25})
    got = focal_loss([(0.1, 0.9)], [1], params)
    assert abs(got - 0.25 * 0.01 * (-math.log(0.9))) <= 1e-12
    # strictly decreasing in the true-class probability on a 100-point grid
    grid = [focal_loss([(1 - p, p)], [1], params)
            for p in np.linspace(0.01, 0.995, 100)]
    assert all(a > b for a, b in zip(grid, grid[1:]))


@acceptance(9, "llm harness offline")
def test_llm_harness_offline():
    from pathlib import Path

    from cedgen import dataset_io, llm

    data = Path(__file__).parent / "data"
    records, _ = dataset_io.read_records(str(data / "llm_ref.ced.jsonl"))
    cfg = llm.LLMRunConfig()
    first = llm.run_eval(cfg, records, k=0,
                         archive=str(data / "llm_archive.jsonl"), offline=True)
    again = llm.run_eval(cfg, records, k=0,
                         archive=str(data / "llm_archive.jsonl"), offline=True)
    expected = (data / "llm_expected_report.txt").read_text()
    assert first.report.to_text() == expected
    assert again.report.to_text() == expected
    # a 59-label response against T=60 is parsed but flagged
    drift = llm.parse_response(",".join("0" for _ in range(59)), expected_T=60)
    assert len(drift.labels) == 59 and not drift.length_match
    # parse_response is total over 10,000 random byte blobs
    rng = np.random.default_rng(99)
    for _ in range(10_000):
        blob = rng.bytes(int(rng.integers(0, 120)))
        text = blob.decode("utf-8", errors="replace")
        try:
            got = llm.parse_response(text, expected_T=10)
            assert all(0 <= x <= 10 for x in got.labels)
        except llm.Unparseable:
            pass
