"""The ``cedgen`` command line: dataset generation, labeling, streaming,
evaluation, rule compilation, and the chat-model harness.

Exit codes: 0 success, 1 validation error, 2 I/O or transport error.
Diagnostics go to standard error; data goes to files or standard output.
"""

from __future__ import annotations

import json
import sys

import click

from . import dataset_io, llm, metrics, simulate
from ._version import __version__
from .core import UnknownToken, parse_ae_token
from .fsm import machine
from .fsm.machine import FsmError
from .fsm.pattern import CompileError
from .fsm.parser import DslError
from .labeler import LabelSession, stream_step, to_single_label
from .rules import builtin_rules, builtin_source, load_rules

#: preset -> (num_traces, trace_len, dwell_stretch)
PRESETS = {
    "train": (10000, 60, 1),
    "val": (2000, 60, 1),
    "test": (2000, 60, 1),
    "ood15": (2000, 180, 3),
    "ood30": (2000, 360, 6),
}

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _Fail(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _validation(msg: str) -> _Fail:
    return _Fail(msg, EXIT_VALIDATION)


def _io(msg: str) -> _Fail:
    return _Fail(msg, EXIT_IO)


def _load_ruleset(path: str | None):
    if path is None:
        return builtin_rules()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _io(str(exc))
    try:
        return load_rules(text)
    except (DslError, CompileError, FsmError) as exc:
        raise _validation(f"{path}: {exc}")


@click.group()
@click.version_option(__version__, prog_name="cedgen")
def main():
    """Synthetic complex-event datasets: generate, label, evaluate."""


@main.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Split preset fixing count, length, and dwell stretch.")
@click.option("--num-traces", "-n", type=int, default=None, help="Record count.")
@click.option("--trace-len", "-T", type=int, default=None, help="Windows per record.")
@click.option("--dwell-stretch", type=int, default=None,
              help="Dwell repetition factor (out-of-distribution lengths).")
@click.option("--seed", type=int, default=7, show_default=True, help="Master seed.")
@click.option("--background-fraction", type=float, default=0.6, show_default=True,
              help="Fraction of records drawn from the neutral background chain.")
@click.option("--rules-file", type=click.Path(exists=True), default=None,
              help="Rule DSL file (default: built-in rules).")
@click.option("--output", "-o", required=True, type=click.Path(),
              help="Dataset path (.ced.jsonl); manifest written beside it.")
def gen(preset, num_traces, trace_len, dwell_stretch, seed,
        background_fraction, rules_file, output):
    """Generate a labeled dataset plus its provenance manifest."""
    n, T, stretch = 2000, 60, 1
    if preset:
        n, T, stretch = PRESETS[preset]
    if num_traces is not None:
        n = num_traces
    if trace_len is not None:
        T = trace_len
    if dwell_stretch is not None:
        stretch = dwell_stretch
    rules = _load_ruleset(rules_file)
    try:
        cfg = simulate.GenerationConfig(
            num_traces=n, trace_len=T, seed=seed,
            background_fraction=background_fraction,
        )
        model = simulate.default_transition_model(dwell_stretch=stretch)
        records = simulate.generate_dataset(rules, cfg, model)
    except ValueError as exc:
        raise _validation(str(exc))
    manifest = dataset_io.Manifest(
        split=preset or "custom",
        count=len(records),
        config={
            "num_traces": cfg.num_traces,
            "trace_len": cfg.trace_len,
            "seed": cfg.seed,
            "background_fraction": cfg.background_fraction,
            "scenario_weights": {str(k): v for k, v in sorted(cfg.scenario_weights.items())},
            "dwell_stretch": stretch,
        },
        model_digest=model.digest(),
        rules_digest=rules.digest(),
    )
    try:
        dataset_io.write_records(output, records, manifest)
    except OSError as exc:
        raise _io(str(exc))
    click.echo(f"wrote {len(records)} records to {output}", err=True)


@main.command()
@click.option("--rules-file", type=click.Path(exists=True), default=None,
              help="Rule DSL file (default: built-in rules).")
@click.option("--trace", "-t", "trace_text", default=None,
              help="Space/comma-separated activity tokens; default: stdin.")
@click.option("--single", is_flag=True, help="Emit the single-label projection.")
def label(rules_file, trace_text, single):
    """Label one trace; prints one label set (or label) per window."""
    rules = _load_ruleset(rules_file)
    text = trace_text if trace_text is not None else sys.stdin.read()
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise _validation("empty trace")
    try:
        trace = [parse_ae_token(t) for t in tokens]
    except UnknownToken as exc:
        raise _validation(str(exc))
    from .labeler import label_trace
    labels = label_trace(rules, trace)
    if single:
        for y in to_single_label(labels):
            click.echo(str(y))
    else:
        for s in labels:
            click.echo(",".join(f"e{ce}" for ce in sorted(s)) if s else "-")


@main.command()
@click.option("--rules-file", type=click.Path(exists=True), default=None,
              help="Rule DSL file (default: built-in rules).")
def stream(rules_file):
    """Online labeling: one token per stdin line, one label line out."""
    rules = _load_ruleset(rules_file)
    session = LabelSession.start(rules)
    for raw in sys.stdin:
        tok = raw.strip()
        if not tok:
            continue
        try:
            ae = parse_ae_token(tok)
        except UnknownToken as exc:
            raise _validation(str(exc))
        emitted = stream_step(session, ae)
        click.echo(",".join(f"e{ce}" for ce in sorted(emitted)) if emitted else "-")


@main.command("eval")
@click.option("--pred", required=True, type=click.Path(exists=True),
              help="Prediction file (.ced.jsonl, id + predicted labels).")
@click.option("--ref", required=True, type=click.Path(exists=True),
              help="Reference dataset (.ced.jsonl).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def eval_cmd(pred, ref, as_json):
    """Score predictions against a reference dataset."""
    try:
        references, _ = dataset_io.read_records(ref)
        paired, unpredicted = dataset_io.read_predictions(pred, references)
    except (dataset_io.ParseError, dataset_io.ValidationError,
            dataset_io.MissingReference) as exc:
        raise _validation(str(exc))
    except OSError as exc:
        raise _io(str(exc))
    if unpredicted:
        click.echo(f"warning: {len(unpredicted)} reference records unpredicted",
                   err=True)
    try:
        report = metrics.compute_report(paired)
    except metrics.EmptyInput as exc:
        raise _validation(str(exc))
    click.echo(json.dumps(report.to_dict(), sort_keys=True, indent=2)
               if as_json else report.to_text(), nl=False)
    if not as_json:
        click.echo()


@main.command("compile")
@click.argument("rules_path", type=click.Path(exists=True), required=False)
@click.option("--dot", "dot_dir", type=click.Path(), default=None,
              help="Directory for one DOT file per machine.")
def compile_cmd(rules_path, dot_dir):
    """Compile a rule file (default: built-in) and report the machines."""
    rules = _load_ruleset(rules_path)
    for ce in rules.classes:
        defn = rules.rules[ce]
        click.echo(f"e{ce} {rules.names[ce]}: {len(defn.states)} states, "
                   f"{len(defn.clocks)} clocks, {len(defn.counters)} counters")
    if dot_dir:
        import os

        try:
            os.makedirs(dot_dir, exist_ok=True)
            for ce in rules.classes:
                path = os.path.join(dot_dir, f"e{ce}.dot")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(machine.to_dot(rules.rules[ce]))
        except OSError as exc:
            raise _io(str(exc))
        click.echo(f"wrote {len(rules.classes)} DOT files to {dot_dir}", err=True)


@main.command("llm")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True),
              help="Dataset to evaluate (.ced.jsonl).")
@click.option("--model", default="gpt-4o", show_default=True, help="Model name.")
@click.option("--k", type=click.Choice(["0", "3"]), default="0", show_default=True,
              help="Few-shot example count.")
@click.option("--archive", required=True, type=click.Path(),
              help="Transcript archive (written online, read with --offline).")
@click.option("--offline", is_flag=True, help="Replay the archive; no network.")
@click.option("--subset", default="1,2,3", show_default=True,
              help="Comma-separated CE classes in the prompt.")
@click.option("--concurrency", type=int, default=4, show_default=True)
def llm_cmd(dataset_path, model, k, archive, offline, subset, concurrency):
    """Run (or replay) the chat-model labeling protocol and score it."""
    try:
        records, _ = dataset_io.read_records(dataset_path)
    except (dataset_io.ParseError, dataset_io.ValidationError) as exc:
        raise _validation(str(exc))
    except OSError as exc:
        raise _io(str(exc))
    try:
        ces = tuple(int(x) for x in subset.split(",") if x.strip())
        config = llm.LLMRunConfig.from_env(model=model, concurrency=concurrency)
        outcome = llm.run_eval(config, records, k=int(k), archive=archive,
                               offline=offline, subset=ces)
    except llm.ConfigError as exc:
        raise _validation(str(exc))
    except (llm.AllFailed, OSError) as exc:
        raise _io(str(exc))
    if outcome.failed_ids:
        click.echo(f"warning: {len(outcome.failed_ids)} records failed transport "
                   "and were excluded", err=True)
    if outcome.unparsed_ids:
        click.echo(f"warning: {len(outcome.unparsed_ids)} responses unparseable, "
                   "scored as empty", err=True)
    click.echo(outcome.report.to_text(), nl=False)


@main.command()
@click.option("--source", is_flag=True, help="Print the rule DSL source.")
def rules(source):
    """List the built-in complex-event rules."""
    if source:
        click.echo(builtin_source(), nl=False)
        return
    rs = builtin_rules()
    for ce in rs.classes:
        click.echo(f"e{ce}\t{rs.names[ce]}")


if __name__ == "__main__":
    sys.exit(main())
