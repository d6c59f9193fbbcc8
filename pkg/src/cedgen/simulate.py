"""Stochastic atomic-event trace generation.

A first-order Markov chain over the 9 activity classes with an explicit dwell
(repeat) factor drives synthesis.  The default chain has self-transition 0.5,
uniform residual mass, and the one documented bias: wash follows flush_toilet
with probability 0.7.  A neutral background chain suppresses rule-completing
transitions for balancing; per-class scenario chains tilt mass toward the
events a rule names.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AE_ALPHABET, AtomicEvent, parse_ae_token
from .labeler import label_trace, to_single_label

N = len(AE_ALPHABET)
ROW_SUM_TOL = 1e-9

FLUSH_WASH_P = 0.7
DEFAULT_DWELL = 0.5
# Background-chain constants (recorded in the dataset manifest): long dwells
# make event changes rare, and short brush/wash dwells prevent the duration
# rules from completing by accident.
NEUTRAL_DWELL = 0.9
NEUTRAL_SHORT_DWELL = 0.5
SCENARIO_BOOST = 4.0

#: Events each rule is about; scenario chains boost these.
SCENARIO_FOCUS = {
    1: ("flush_toilet", "wash", "type", "click"),
    2: ("eat", "drink", "sit", "wash"),
    3: ("brush",),
    4: ("brush", "eat", "drink"),
    5: ("sit", "type", "click", "walk"),
    6: ("wash",),
    7: ("brush",),
    8: ("eat", "sit", "type"),
    9: ("type", "walk"),
    10: ("sit", "click"),
}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionModel:
    initial: np.ndarray   # (9,) probability vector
    matrix: np.ndarray    # (9, 9) row-stochastic
    dwell_stretch: int = 1

    def __post_init__(self):
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=float))
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        self.validate()

    def validate(self) -> None:
        if self.initial.shape != (N,) or self.matrix.shape != (N, N):
            raise ModelError("model must cover exactly the 9 atomic-event classes")
        if (self.initial < 0).any() or (self.matrix < 0).any():
            raise ModelError("probabilities must be non-negative")
        if abs(self.initial.sum() - 1.0) > ROW_SUM_TOL:
            raise ModelError("initial distribution does not sum to 1")
        bad = np.abs(self.matrix.sum(axis=1) - 1.0) > ROW_SUM_TOL
        if bad.any():
            names = [AE_ALPHABET[i].value for i in np.flatnonzero(bad)]
            raise ModelError(f"rows do not sum to 1: {', '.join(names)}")
        if self.dwell_stretch < 1:
            raise ModelError("dwell_stretch must be >= 1")

    def digest(self) -> str:
        import hashlib

        payload = model_to_text(self).encode()
        return hashlib.sha256(payload).hexdigest()


def default_transition_model(dwell_stretch: int = 1) -> TransitionModel:
    """Dwell 0.5, uniform residual, and the 0.7 flush_toilet -> wash bias.

    The flush_toilet row cannot keep a 0.5 dwell next to the 0.7 bias, so its
    remaining 0.3 mass spreads uniformly over the other 8 classes.
    """
    m = np.full((N, N), (1.0 - DEFAULT_DWELL) / (N - 1))
    np.fill_diagonal(m, DEFAULT_DWELL)
    fi = AtomicEvent.FLUSH_TOILET.index
    wi = AtomicEvent.WASH.index
    m[fi, :] = (1.0 - FLUSH_WASH_P) / (N - 1)
    m[fi, wi] = FLUSH_WASH_P
    return TransitionModel(np.full(N, 1.0 / N), m, dwell_stretch)


def neutral_transition_model(dwell_stretch: int = 1) -> TransitionModel:
    """Background chain: rare event changes, no flush bias, short wash/brush."""
    short = {AtomicEvent.BRUSH.index, AtomicEvent.WASH.index}
    m = np.zeros((N, N))
    for i in range(N):
        dwell = NEUTRAL_SHORT_DWELL if i in short else NEUTRAL_DWELL
        m[i, :] = (1.0 - dwell) / (N - 1)
        m[i, i] = dwell
    return TransitionModel(np.full(N, 1.0 / N), m, dwell_stretch)


def scenario_model(ce: int, base: TransitionModel | None = None) -> TransitionModel:
    """Tilt the base chain toward one rule's events (entry mass boosted)."""
    if ce not in SCENARIO_FOCUS:
        raise ModelError(f"no scenario defined for class {ce}")
    base = base or default_transition_model()
    boost = np.ones(N)
    for name in SCENARIO_FOCUS[ce]:
        boost[parse_ae_token(name).index] = SCENARIO_BOOST
    m = base.matrix * boost[None, :]
    m /= m.sum(axis=1, keepdims=True)
    init = base.initial * boost
    init /= init.sum()
    return TransitionModel(init, m, base.dwell_stretch)


def sample_trace(model: TransitionModel, T: int, seed) -> tuple:
    """Length-T trace; identical seed gives an identical trace."""
    if T < 1:
        raise ValueError("trace length must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    # Inverse-CDF sampling keeps the per-window cost to one uniform draw.
    cum_rows = np.cumsum(model.matrix, axis=1)
    cum_init = np.cumsum(model.initial)
    out = []
    current = min(int(np.searchsorted(cum_init, rng.random(), side="right")), N - 1)
    while len(out) < T:
        out.extend([AE_ALPHABET[current]] * model.dwell_stretch)
        current = min(int(np.searchsorted(cum_rows[current], rng.random(), side="right")), N - 1)
    return tuple(out[:T])


def default_scenario_weights() -> dict:
    """Key 0 is the untilted default chain; e1..e10 pick scenario chains."""
    weights = {0: 10.0}
    weights.update({ce: 1.0 for ce in SCENARIO_FOCUS})
    return weights


@dataclass(frozen=True)
class GenerationConfig:
    num_traces: int
    trace_len: int = 60
    seed: int = 7
    background_fraction: float = 0.6
    scenario_weights: dict = field(default_factory=default_scenario_weights)

    def __post_init__(self):
        if self.num_traces < 1 or self.trace_len < 1:
            raise ValueError("num_traces and trace_len must be >= 1")
        if not 0.0 <= self.background_fraction <= 1.0:
            raise ValueError("background_fraction must be in [0, 1]")


def record_seed(seed: int, index: int) -> int:
    """Deterministic per-record split of the master seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(2, np.uint64)[0])


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    seed: int
    ae_seq: tuple          # AtomicEvent tokens
    ce_labels: tuple       # per-window frozensets of CE ids
    ce_single: tuple       # per-window single-label projection


def generate_record(rules, cfg: GenerationConfig, index: int,
                    model: TransitionModel | None = None) -> DatasetRecord:
    """One reproducible record; usable on its own for partial regeneration."""
    base = model or default_transition_model()
    rseed = record_seed(cfg.seed, index)
    rng = np.random.default_rng(rseed)
    if rng.random() < cfg.background_fraction:
        chain = neutral_transition_model(base.dwell_stretch)
    else:
        weights = cfg.scenario_weights or {0: 1.0}
        keys = sorted(weights)
        probs = np.array([weights[k] for k in keys], dtype=float)
        probs /= probs.sum()
        pick = int(keys[int(rng.choice(len(keys), p=probs))])
        chain = base if pick == 0 else scenario_model(pick, base)
    trace = sample_trace(chain, cfg.trace_len, rng)
    labels = label_trace(rules, trace)
    return DatasetRecord(
        id=f"r{index:06d}",
        seed=rseed,
        ae_seq=trace,
        ce_labels=labels,
        ce_single=to_single_label(labels),
    )


def generate_dataset(rules, cfg: GenerationConfig,
                     model: TransitionModel | None = None) -> list:
    """All records for one config, ordered by record index."""
    return [generate_record(rules, cfg, i, model) for i in range(cfg.num_traces)]


def model_to_text(model: TransitionModel) -> str:
    """Plain-text serialization: labeled rows, initial vector, dwell factor."""
    lines = [f"dwell_stretch {model.dwell_stretch}"]
    lines.append("initial " + " ".join(repr(float(p)) for p in model.initial))
    for i, ae in enumerate(AE_ALPHABET):
        row = " ".join(repr(float(p)) for p in model.matrix[i])
        lines.append(f"{ae.value} {row}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> TransitionModel:
    dwell_stretch = 1
    initial = None
    rows = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "dwell_stretch":
            dwell_stretch = int(rest[0])
        elif head == "initial":
            initial = np.array([float(x) for x in rest])
        else:
            rows[parse_ae_token(head)] = np.array([float(x) for x in rest])
    missing = [ae.value for ae in AE_ALPHABET if ae not in rows]
    if missing:
        raise ModelError(f"missing matrix rows: {', '.join(missing)}")
    if initial is None:
        raise ModelError("missing initial distribution")
    matrix = np.stack([rows[ae] for ae in AE_ALPHABET])
    return TransitionModel(initial, matrix, dwell_stretch)
