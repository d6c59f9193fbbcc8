"""Evaluation metrics: length accuracy, conditional/coarse/window F1, positive
F1, and a reference focal-loss computation for external trainers.

F1 aggregation is micro: true/false positives and false negatives pool across
all windows of all qualifying records before the ratio.  Classes absent from
both predictions and references score as undefined (``None``), never 0, and
are excluded (and listed) when averaging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import CE_CLASSES, CE_DEFAULT


class EmptyInput(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class PredictionRecord:
    """One trace's predicted single-label sequence next to its reference.

    The reference may be a label-set sequence (canonical datasets) or a
    single-label sequence (LLM protocol); prediction length may differ from
    the reference length.
    """

    id: str
    predicted: tuple
    reference: tuple

    @property
    def ref_len(self) -> int:
        return len(self.reference)

    @property
    def length_match(self) -> bool:
        return len(self.predicted) == self.ref_len

    def ref_has(self, t: int, ce: int) -> bool:
        ref = self.reference[t]
        if isinstance(ref, (set, frozenset)):
            return ce in ref
        return ref == ce


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def f1(self) -> float | None:
        if self.tp == self.fp == self.fn == 0:
            return None
        return 2 * self.tp / (2 * self.tp + self.fp + self.fn)


def _require_records(records):
    records = list(records)
    if not records:
        raise EmptyInput("no prediction records")
    return records


def length_accuracy(records) -> float:
    records = _require_records(records)
    return sum(1 for r in records if r.length_match) / len(records)


def _window_counts(records, ce: int) -> Counts:
    tp = fp = fn = 0
    for r in records:
        for t in range(r.ref_len):
            pred = r.predicted[t] == ce
            ref = r.ref_has(t, ce)
            if pred and ref:
                tp += 1
            elif pred:
                fp += 1
            elif ref:
                fn += 1
    return Counts(tp, fp, fn)


def conditional_f1(records, ce: int) -> float | None:
    """Element-wise F1 over records whose predicted length matches.

    Undefined (None) when no record qualifies or the class appears nowhere.
    """
    records = _require_records(records)
    matched = [r for r in records if r.length_match]
    if not matched:
        return None
    return _window_counts(matched, ce).f1()


def coarse_counts(records, ce: int) -> Counts:
    tp = fp = fn = 0
    for r in records:
        pred = any(p == ce for p in r.predicted)
        ref = any(r.ref_has(t, ce) for t in range(r.ref_len))
        if pred and ref:
            tp += 1
        elif pred:
            fp += 1
        elif ref:
            fn += 1
    return Counts(tp, fp, fn)


def coarse_f1(records, ce: int) -> float | None:
    """Presence-level F1 per record; timing and length are ignored."""
    return coarse_counts(_require_records(records), ce).f1()


def window_f1(records, ce: int) -> float | None:
    """Micro F1 per class over all windows; records must be length-matched."""
    records = _require_records(records)
    mismatched = [r.id for r in records if not r.length_match]
    if mismatched:
        raise ValueError(f"length-mismatched records: {mismatched[:3]}")
    return _window_counts(records, ce).f1()


def positive_f1(records) -> tuple[float | None, tuple]:
    """Mean window F1 over e1..e10; undefined classes excluded and listed."""
    scores = {ce: window_f1(records, ce) for ce in CE_CLASSES}
    excluded = tuple(ce for ce, s in scores.items() if s is None)
    defined = [s for s in scores.values() if s is not None]
    if not defined:
        return None, excluded
    return sum(defined) / len(defined), excluded


def default_alpha() -> dict:
    alpha = {CE_DEFAULT: 0.005}
    alpha.update({ce: 0.25 for ce in CE_CLASSES})
    return alpha


@dataclass(frozen=True)
class FocalLossParams:
    gamma: float = 2.0
    alpha: dict = field(default_factory=default_alpha)

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        for ce, a in self.alpha.items():
            if not 0 < a <= 1:
                raise ValueError(f"alpha[{ce}] must be in (0, 1]")


def focal_loss(probs, labels, params: FocalLossParams | None = None) -> float:
    """-sum_t alpha_y (1 - p_y)^gamma log(p_y) over one sequence.

    The caller is responsible for clamping zero probabilities; a zero p_y
    raises :class:`DomainError` rather than being silently repaired.
    """
    params = params or FocalLossParams()
    probs = list(probs)
    labels = list(labels)
    if len(probs) != len(labels):
        raise ValueError("probs and labels length mismatch")
    total = 0.0
    for t, (vec, y) in enumerate(zip(probs, labels)):
        s = float(sum(vec))
        if abs(s - 1.0) > 1e-6:
            raise ValueError(f"window {t}: probabilities sum to {s}, not 1")
        p = float(vec[y])
        if p <= 0.0:
            raise DomainError(f"window {t}: p=0 for the true class; clamp first")
        total += params.alpha[y] * (1.0 - p) ** params.gamma * (-math.log(p))
    return total


@dataclass(frozen=True)
class MetricsReport:
    num_records: int
    length_accuracy: float
    per_class: dict      # ce -> {"conditional_f1": x, "coarse_f1": x, "window_f1": x}
    positive_f1: float | None
    positive_f1_excluded: tuple
    counts: dict         # ce -> {"window": Counts, "coarse": Counts}
    aggregation: str = "micro"

    def to_dict(self) -> dict:
        return {
            "num_records": self.num_records,
            "length_accuracy": self.length_accuracy,
            "aggregation": self.aggregation,
            "per_class": {
                str(ce): dict(vals) for ce, vals in sorted(self.per_class.items())
            },
            "positive_f1": self.positive_f1,
            "positive_f1_excluded": list(self.positive_f1_excluded),
            "counts": {
                str(ce): {
                    kind: {"tp": c.tp, "fp": c.fp, "fn": c.fn}
                    for kind, c in kinds.items()
                }
                for ce, kinds in sorted(self.counts.items())
            },
        }

    def to_text(self) -> str:
        def fmt(v):
            return "undefined" if v is None else f"{v:.6f}"

        lines = [
            f"records {self.num_records}",
            f"length_accuracy {fmt(self.length_accuracy)}",
            f"aggregation {self.aggregation}",
        ]
        for ce in sorted(self.per_class):
            vals = self.per_class[ce]
            lines.append(
                f"e{ce} conditional_f1={fmt(vals['conditional_f1'])} "
                f"coarse_f1={fmt(vals['coarse_f1'])} window_f1={fmt(vals['window_f1'])}"
            )
        lines.append(f"positive_f1 {fmt(self.positive_f1)}")
        if self.positive_f1_excluded:
            excluded = ",".join(f"e{ce}" for ce in self.positive_f1_excluded)
            lines.append(f"positive_f1_excluded {excluded}")
        return "\n".join(lines) + "\n"


def compute_report(records) -> MetricsReport:
    """The full metric battery for one batch of prediction records."""
    records = _require_records(records)
    matched = [r for r in records if r.length_match]
    per_class = {}
    counts = {}
    for ce in CE_CLASSES:
        window = _window_counts(matched, ce) if matched else Counts()
        coarse = coarse_counts(records, ce)
        cond = window.f1() if matched else None
        per_class[ce] = {
            "conditional_f1": cond,
            "coarse_f1": coarse.f1(),
            "window_f1": window.f1() if len(matched) == len(records) else None,
        }
        counts[ce] = {"window": window, "coarse": coarse}
    if matched and len(matched) == len(records):
        pos, excluded = positive_f1(records)
    else:
        pos, excluded = None, tuple(CE_CLASSES)
    return MetricsReport(
        num_records=len(records),
        length_accuracy=length_accuracy(records),
        per_class=per_class,
        positive_f1=pos,
        positive_f1_excluded=excluded,
        counts=counts,
    )
