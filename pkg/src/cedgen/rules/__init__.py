"""The ten built-in complex-event rules, compiled from the shipped DSL file."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

from ..core import CE_CLASSES
from ..fsm.parser import parse_rules
from . import reference

__all__ = ["RuleSet", "builtin_rules", "builtin_source", "load_rules", "reference"]


@dataclass(frozen=True)
class RuleSet:
    """Compiled machines for CE classes e1..e10 plus their DSL provenance."""

    rules: dict       # ce id -> FsmDefinition
    provenance: dict  # ce id -> DSL source text
    names: dict       # ce id -> display name

    def __post_init__(self):
        for ce, defn in self.rules.items():
            if defn.ce_class != ce:
                raise ValueError(f"machine for e{ce} labeled e{defn.ce_class}")

    @property
    def classes(self) -> tuple:
        return tuple(sorted(self.rules))

    def digest(self) -> str:
        payload = "\n".join(self.provenance[ce] for ce in self.classes)
        return hashlib.sha256(payload.encode()).hexdigest()


def load_rules(text: str) -> RuleSet:
    parsed = parse_rules(text)
    return RuleSet(
        rules={ce: defn for ce, (_, defn, _) in parsed.items()},
        provenance={ce: src for ce, (_, _, src) in parsed.items()},
        names={ce: name for ce, (name, _, _) in parsed.items()},
    )


def builtin_source() -> str:
    return resources.files(__package__).joinpath("builtin.ced").read_text()


_BUILTIN: RuleSet | None = None


def builtin_rules() -> RuleSet:
    """The ten Table-class rules; compiled once and cached."""
    global _BUILTIN
    if _BUILTIN is None:
        rs = load_rules(builtin_source())
        missing = set(CE_CLASSES) - set(rs.rules)
        if missing:
            raise RuntimeError(f"builtin rules incomplete: missing {sorted(missing)}")
        _BUILTIN = rs
    return _BUILTIN
