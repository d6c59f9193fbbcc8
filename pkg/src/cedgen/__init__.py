"""cedgen: synthetic complex-event datasets over atomic-activity streams.

Rules over 5-second activity windows compile to timed/counting finite-state
machines; a seeded Markov simulator generates traces; the labeler runs every
machine online; metrics and an LLM harness score predictions.
"""

from ._version import __version__
from .core import AE_ALPHABET, CE_CLASSES, CE_DEFAULT, AtomicEvent, parse_ae_token
from .labeler import LabelSession, label_trace, stream_step, to_single_label
from .rules import RuleSet, builtin_rules, load_rules
from .simulate import (
    DatasetRecord,
    GenerationConfig,
    TransitionModel,
    default_transition_model,
    generate_dataset,
    sample_trace,
)

__all__ = [
    "__version__",
    "AE_ALPHABET", "CE_CLASSES", "CE_DEFAULT", "AtomicEvent", "parse_ae_token",
    "LabelSession", "label_trace", "stream_step", "to_single_label",
    "RuleSet", "builtin_rules", "load_rules",
    "DatasetRecord", "GenerationConfig", "TransitionModel",
    "default_transition_model", "generate_dataset", "sample_trace",
]
