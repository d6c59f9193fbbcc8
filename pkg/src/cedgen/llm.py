"""Chat-model evaluation harness for the window-labeling task.

Builds prompts that embed the rule definitions (the simplified e1..e3 subset
by default), sends one request per record against a generic chat-completion
endpoint, archives every raw response verbatim before any parsing, and scores
the parsed label sequences with the metrics module.  An archive can be
replayed offline, reproducing the report exactly without network access.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field

import requests

from .core import CE_DEFAULT
from .metrics import MetricsReport, PredictionRecord, compute_report

API_KEY_ENV = "CEDGEN_LLM_API_KEY"
ENDPOINT_ENV = "CEDGEN_LLM_ENDPOINT"

DEFAULT_SUBSET = (1, 2, 3)
FEW_SHOT_CHOICES = (0, 3)


class ConfigError(ValueError):
    pass


class Unparseable(ValueError):
    pass


class AllFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptBundle:
    """Everything one request needs: task text, optional examples, the query."""

    system_context: str
    few_shot: tuple       # ((ae tokens, labels), ...) pairs
    query_trace: tuple    # ae token strings

    def __post_init__(self):
        if not self.query_trace:
            raise ConfigError("query trace is empty")
        for tokens, labels in self.few_shot:
            if len(tokens) != len(labels):
                raise ConfigError("few-shot example has mismatched lengths")

    @property
    def k(self) -> int:
        return len(self.few_shot)


def rules_context(rules, subset=DEFAULT_SUBSET) -> str:
    """Task description plus the rule definitions for the chosen classes."""
    lines = [
        "You label an activity stream.  Each input token is one 5-second",
        "window containing a single atomic activity.  Complex events are",
        "defined below; a complex event's label appears only at the window",
        "where its pattern completes.  Every other window is labeled 0.",
        "",
        "Complex event definitions:",
    ]
    for ce in subset:
        if ce not in rules.rules:
            raise ConfigError(f"rule set has no class e{ce}")
        src = " ".join(rules.provenance[ce].split())
        lines.append(f"  {ce} = {rules.names[ce]}: {src}")
    lines += [
        "",
        "Respond with exactly one integer label per input window, separated",
        "by commas, and nothing else.",
    ]
    return "\n".join(lines)


def make_bundle(rules, trace, k: int = 0, example_pool=(),
                subset=DEFAULT_SUBSET) -> PromptBundle:
    """Bundle for one trace; examples come from ``example_pool`` pairs."""
    if k not in FEW_SHOT_CHOICES:
        raise ConfigError(f"k must be one of {FEW_SHOT_CHOICES}")
    pool = tuple(example_pool)
    if k > len(pool):
        raise ConfigError(f"k={k} requested but only {len(pool)} examples given")
    return PromptBundle(
        system_context=rules_context(rules, subset),
        few_shot=pool[:k],
        query_trace=tuple(str(t) for t in trace),
    )


def build_prompt(bundle: PromptBundle) -> str:
    """Deterministic rendering; examples use the exact query format."""
    parts = [bundle.system_context, ""]
    for i, (tokens, labels) in enumerate(bundle.few_shot, start=1):
        parts.append(f"Example {i}:")
        parts.append("Input: " + ", ".join(str(t) for t in tokens))
        parts.append("Output: " + ", ".join(str(x) for x in labels))
        parts.append("")
    n = len(bundle.query_trace)
    parts.append("Input: " + ", ".join(bundle.query_trace))
    parts.append(f"Output ({n} labels):")
    return "\n".join(parts)


@dataclass(frozen=True)
class ParsedResponse:
    labels: tuple
    expected_T: int

    @property
    def length_match(self) -> bool:
        return len(self.labels) == self.expected_T


_NUM_RE = re.compile(r"[eE]?(\d+)")
_SEP_RE = re.compile(r"[\s,;|`\[\]()*]*\Z")


def parse_response(text: str, expected_T: int) -> ParsedResponse:
    """Longest run of labels 0..10 anywhere in the text.

    Tolerates markdown fences, prose preambles, 'e3'-style labels, and odd
    separators; never truncates or pads the sequence it finds.  Raises
    :class:`Unparseable` when no label appears at all.
    """
    best: list = []
    current: list = []
    pos = 0
    for m in _NUM_RE.finditer(text):
        gap = text[pos:m.start()]
        value = int(m.group(1))
        if current and not _SEP_RE.match(gap):
            current = []
        if 0 <= value <= 10:
            current.append(value)
            if len(current) > len(best):
                best = list(current)
        else:
            current = []
        pos = m.end()
    if not best:
        raise Unparseable("no label sequence found in response")
    return ParsedResponse(labels=tuple(best), expected_T=expected_T)


@dataclass(frozen=True)
class LLMRunConfig:
    endpoint: str = ""
    model: str = "gpt-4o"
    timeout: float = 60.0
    max_retries: int = 3
    concurrency: int = 4
    backoff_base: float = 0.5
    api_key: str | None = None

    def __post_init__(self):
        if self.concurrency < 1:
            raise ConfigError("concurrency limit must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")

    @classmethod
    def from_env(cls, **overrides) -> "LLMRunConfig":
        overrides.setdefault("endpoint", os.environ.get(ENDPOINT_ENV, ""))
        overrides.setdefault("api_key", os.environ.get(API_KEY_ENV))
        return cls(**overrides)


def _extract_content(data: dict) -> str:
    try:
        return data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        pass
    for key in ("content", "text", "output"):
        if isinstance(data.get(key), str):
            return data[key]
    raise ValueError("response JSON has no recognizable content field")


class TransportError(RuntimeError):
    pass


def _request(config: LLMRunConfig, prompt: str) -> str:
    """One chat completion with bounded exponential backoff."""
    if not config.endpoint:
        raise TransportError(f"no endpoint configured (set {ENDPOINT_ENV})")
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    body = {
        "model": config.model,
        "messages": [{"role": "user", "content": prompt}],
    }
    last = "no attempt made"
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(config.backoff_base * (2 ** (attempt - 1)))
        try:
            resp = requests.post(config.endpoint, json=body, headers=headers,
                                 timeout=config.timeout)
        except requests.RequestException as exc:
            last = str(exc)
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last = f"HTTP {resp.status_code}"
            continue
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return _extract_content(resp.json())
        except ValueError as exc:
            raise TransportError(str(exc)) from exc
    raise TransportError(f"gave up after {config.max_retries + 1} attempts: {last}")


class TranscriptWriter:
    """Append-only line-delimited transcript; appends are serialized."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._fh = open(path, "a", encoding="utf-8", newline="\n")

    def append(self, record_id: str, response: str | None, error: str | None = None) -> None:
        obj = {"id": record_id, "response": response}
        if error is not None:
            obj["error"] = error
        line = json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def load_transcripts(path: str) -> dict:
    """id -> (response text or None, error or None); later lines win."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            out[obj["id"]] = (obj.get("response"), obj.get("error"))
    return out


@dataclass(frozen=True)
class EvalOutcome:
    report: MetricsReport
    failed_ids: tuple      # transport failures, excluded from metrics
    unparsed_ids: tuple    # archived but unparseable, scored as empty
    predictions: tuple = field(repr=False, default=())


def _project_reference(record, subset) -> tuple:
    keep = set(subset)
    return tuple(y if y in keep else CE_DEFAULT for y in record.ce_single)


def run_eval(config: LLMRunConfig, dataset, k: int = 0, archive: str | None = None,
             offline: bool = False, rules=None, subset=DEFAULT_SUBSET) -> EvalOutcome:
    """Score a dataset against the endpoint (or a replayed archive).

    With few-shot k>0 the first k records become the in-prompt examples and
    are removed from the scored set.  Online runs require ``archive`` (raw
    responses are persisted before parsing); offline runs replay it.
    """
    if rules is None:
        from .rules import builtin_rules
        rules = builtin_rules()
    records = list(dataset)
    examples = [
        (tuple(ae.value for ae in r.ae_seq), _project_reference(r, subset))
        for r in records[:k]
    ]
    targets = records[k:]
    if not targets:
        raise ConfigError("no records left to evaluate after few-shot split")

    if offline:
        if not archive:
            raise ConfigError("offline replay needs an archive path")
        transcripts = load_transcripts(archive)
        responses = {r.id: transcripts.get(r.id, (None, "missing from archive"))
                     for r in targets}
    else:
        if not archive:
            raise ConfigError("online runs need an archive path")
        writer = TranscriptWriter(archive)
        responses = {}
        try:
            from concurrent.futures import ThreadPoolExecutor

            def one(rec):
                bundle = make_bundle(rules, (ae.value for ae in rec.ae_seq),
                                     k=k, example_pool=examples, subset=subset)
                try:
                    text = _request(config, build_prompt(bundle))
                except TransportError as exc:
                    writer.append(rec.id, None, error=str(exc))
                    return rec.id, (None, str(exc))
                writer.append(rec.id, text)
                return rec.id, (text, None)

            with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
                for rid, payload in pool.map(one, targets):
                    responses[rid] = payload
        finally:
            writer.close()

    preds = []
    failed = []
    unparsed = []
    for rec in targets:
        text, error = responses[rec.id]
        if text is None:
            failed.append(rec.id)
            continue
        reference = _project_reference(rec, subset)
        try:
            parsed = parse_response(text, expected_T=len(reference))
            labels = parsed.labels
        except Unparseable:
            unparsed.append(rec.id)
            labels = ()
        preds.append(PredictionRecord(id=rec.id, predicted=labels,
                                      reference=reference))
    if not preds:
        raise AllFailed(f"all {len(targets)} records failed: no scorable responses")
    return EvalOutcome(
        report=compute_report(preds),
        failed_ids=tuple(failed),
        unparsed_ids=tuple(unparsed),
        predictions=tuple(preds),
    )
