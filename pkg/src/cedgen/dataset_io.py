"""Dataset, prediction, and manifest files.

Datasets and predictions are line-delimited JSON (``.ced.jsonl``), one object
per line, ordered by record id so identical inputs always produce identical
bytes.  Each dataset travels with a sibling manifest
(``.ced.manifest.json``) carrying the generator version, the generation
config, and content digests of the transition model and rule set.

Loading never repairs data: every deviation surfaces as :class:`ParseError`
(bad line) or :class:`ValidationError` (bad record).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ._version import __version__
from .core import CE_CLASSES, CE_DEFAULT, UnknownToken, WINDOW_SECONDS, parse_ae_token
from .metrics import PredictionRecord
from .simulate import DatasetRecord

DATASET_SUFFIX = ".ced.jsonl"
MANIFEST_SUFFIX = ".ced.manifest.json"

_VALID_LABELS = {CE_DEFAULT, *CE_CLASSES}


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class ValidationError(ValueError):
    def __init__(self, record_id: str, reason: str):
        self.record_id = record_id
        super().__init__(f"record {record_id!r}: {reason}")


class MissingReference(KeyError):
    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"prediction {record_id!r} has no reference record")


def manifest_path(path: str) -> str:
    if path.endswith(DATASET_SUFFIX):
        return path[: -len(DATASET_SUFFIX)] + MANIFEST_SUFFIX
    return path + MANIFEST_SUFFIX


@dataclass(frozen=True)
class Manifest:
    """Provenance sidecar written next to every generated dataset."""

    split: str
    count: int
    config: dict          # GenerationConfig echo (plain JSON values)
    model_digest: str
    rules_digest: str
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "generator": "cedgen",
            "version": self.version,
            "split": self.split,
            "count": self.count,
            "config": self.config,
            "model_digest": self.model_digest,
            "rules_digest": self.rules_digest,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Manifest":
        return cls(
            split=obj["split"],
            count=obj["count"],
            config=obj["config"],
            model_digest=obj["model_digest"],
            rules_digest=obj["rules_digest"],
            version=obj.get("version", "unknown"),
        )


def _validate_record(rec: DatasetRecord) -> None:
    n = len(rec.ae_seq)
    if not (n == len(rec.ce_labels) == len(rec.ce_single)):
        raise ValidationError(rec.id, "sequence lengths disagree")
    for t, (labels, single) in enumerate(zip(rec.ce_labels, rec.ce_single)):
        bad = set(labels) - _VALID_LABELS
        if bad or single not in _VALID_LABELS:
            raise ValidationError(rec.id, f"window {t}: label outside 0..10")
        if single != CE_DEFAULT and single not in labels:
            raise ValidationError(rec.id, f"window {t}: projection {single} not in label set")
        if single == CE_DEFAULT and labels:
            raise ValidationError(rec.id, f"window {t}: non-empty label set projected to 0")


def record_to_obj(rec: DatasetRecord) -> dict:
    _validate_record(rec)
    return {
        "id": rec.id,
        "seed": rec.seed,
        "window_s": WINDOW_SECONDS,
        "ae_seq": [ae.value for ae in rec.ae_seq],
        "ce_labels": [sorted(labels) for labels in rec.ce_labels],
        "ce_single": list(rec.ce_single),
    }


def obj_to_record(obj: dict) -> DatasetRecord:
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise ValidationError(str(rid), "missing or non-string id")
    for key in ("seed", "ae_seq", "ce_labels", "ce_single"):
        if key not in obj:
            raise ValidationError(rid, f"missing field {key!r}")
    if obj.get("window_s", WINDOW_SECONDS) != WINDOW_SECONDS:
        raise ValidationError(rid, f"window_s must be {WINDOW_SECONDS}")
    try:
        ae_seq = tuple(parse_ae_token(tok) for tok in obj["ae_seq"])
    except UnknownToken as exc:
        raise ValidationError(rid, str(exc)) from exc
    rec = DatasetRecord(
        id=rid,
        seed=int(obj["seed"]),
        ae_seq=ae_seq,
        ce_labels=tuple(frozenset(int(c) for c in ls) for ls in obj["ce_labels"]),
        ce_single=tuple(int(c) for c in obj["ce_single"]),
    )
    _validate_record(rec)
    return rec


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_records(path: str, records, manifest: Manifest | None = None) -> None:
    """Records sorted by id plus (optionally) the sibling manifest.

    Everything is validated before the first byte is written, so a failure
    leaves no partial file behind.
    """
    records = sorted(records, key=lambda r: r.id)
    seen = set()
    for rec in records:
        if rec.id in seen:
            raise ValidationError(rec.id, "duplicate id")
        seen.add(rec.id)
    lines = [_dump_line(record_to_obj(rec)) for rec in records]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(lines)
        if manifest is not None:
            text = json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n"
            with open(manifest_path(path), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def read_records(path: str) -> tuple:
    """(records, manifest-or-None); validates every invariant on load."""
    records = []
    seen = set()
    try:
        with open(path, encoding="utf-8") as fh:
            raw_lines = fh.readlines()
    except OSError as exc:
        raise OSError(f"reading {path}: {exc}") from exc
    for lineno, raw in enumerate(raw_lines, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise ParseError(lineno, "expected a JSON object")
        rec = obj_to_record(obj)
        if rec.id in seen:
            raise ValidationError(rec.id, "duplicate id")
        seen.add(rec.id)
        records.append(rec)
    manifest = None
    mpath = manifest_path(path)
    try:
        with open(mpath, encoding="utf-8") as fh:
            manifest = Manifest.from_dict(json.load(fh))
    except FileNotFoundError:
        pass
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, f"manifest {mpath}: {exc.msg}") from exc
    return records, manifest


def write_predictions(path: str, predictions: dict) -> None:
    """Predictions as {id: label sequence}, one line per id, sorted."""
    lines = []
    for rid in sorted(predictions):
        labels = [int(x) for x in predictions[rid]]
        bad = set(labels) - _VALID_LABELS
        if bad:
            raise ValidationError(rid, f"labels outside 0..10: {sorted(bad)}")
        lines.append(_dump_line({"id": rid, "predicted": labels}))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


def read_predictions(path: str, references) -> tuple:
    """Pair a prediction file with reference records by id.

    Returns (prediction records, ids of references left unpredicted).
    Wrong-length predictions are accepted; they surface through the
    length-match flag, not as load errors.  A prediction whose id has no
    reference raises :class:`MissingReference`.
    """
    by_id = {rec.id: rec for rec in references}
    paired = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON ({exc.msg})") from exc
            rid = obj.get("id")
            if not isinstance(rid, str) or "predicted" not in obj:
                raise ParseError(lineno, "expected fields 'id' and 'predicted'")
            if rid in seen:
                raise ValidationError(rid, "duplicate prediction id")
            seen.add(rid)
            ref = by_id.get(rid)
            if ref is None:
                raise MissingReference(rid)
            predicted = tuple(int(x) for x in obj["predicted"])
            bad = set(predicted) - _VALID_LABELS
            if bad:
                raise ValidationError(rid, f"labels outside 0..10: {sorted(bad)}")
            paired.append(PredictionRecord(id=rid, predicted=predicted,
                                           reference=tuple(ref.ce_labels)))
    unpredicted = tuple(rid for rid in sorted(by_id) if rid not in seen)
    return paired, unpredicted
