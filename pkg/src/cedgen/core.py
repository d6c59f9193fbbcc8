"""Shared vocabulary: atomic-event alphabet, complex-event ids, window arithmetic."""

from __future__ import annotations

import math
from enum import Enum

#: Duration of one stream window, in seconds. Every rule threshold is stored in
#: windows after a single conversion; making this configurable would silently
#: change rule semantics, so it is a module constant.
WINDOW_SECONDS = 5


class UnknownToken(ValueError):
    """Raised when a string does not name any atomic-event class."""

    def __init__(self, text: str):
        super().__init__(f"unknown atomic event token: {text!r}")
        self.text = text


class AtomicEvent(Enum):
    """The nine per-window activity classes."""

    WALK = "walk"
    SIT = "sit"
    BRUSH = "brush"
    CLICK = "click"
    DRINK = "drink"
    EAT = "eat"
    TYPE = "type"
    FLUSH_TOILET = "flush_toilet"
    WASH = "wash"

    def __str__(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return _AE_INDEX[self]


AE_ALPHABET: tuple[AtomicEvent, ...] = tuple(AtomicEvent)
_AE_INDEX = {ae: i for i, ae in enumerate(AE_ALPHABET)}
_AE_BY_TOKEN = {ae.value: ae for ae in AE_ALPHABET}

# Spellings seen in the wild; canonical output stays lowercase-with-underscore.
_ALIASES = {
    "click_mouse": AtomicEvent.CLICK,
    "flush": AtomicEvent.FLUSH_TOILET,
}

#: Complex-event class ids. 0 is the default/no-event encoding used only by
#: single-label projections; label sets never contain it.
CE_DEFAULT = 0
CE_CLASSES: tuple[int, ...] = tuple(range(1, 11))


def ce_name(ce: int) -> str:
    return f"e{ce}"


def parse_ae_token(text: str) -> AtomicEvent:
    """Parse an atomic-event token, case-insensitively.

    Spaces are treated as underscores so "Flush Toilet" and "flush_toilet"
    both resolve.  Raises :class:`UnknownToken` for anything outside the
    9-class alphabet.
    """
    key = text.strip().lower().replace(" ", "_")
    ae = _AE_BY_TOKEN.get(key) or _ALIASES.get(key)
    if ae is None:
        raise UnknownToken(text)
    return ae


def seconds_to_windows(seconds: int) -> int:
    """Convert a duration in seconds to a window count (ceiling division)."""
    if seconds < 0:
        raise ValueError(f"negative duration: {seconds}")
    return math.ceil(seconds / WINDOW_SECONDS)


# A trace is any non-empty sequence of AtomicEvent; a label sequence is a
# same-length sequence of frozensets of CE ids.  Both are plain immutable
# values so they can be shared freely across threads.
AETrace = tuple
CELabelSeq = tuple


def validate_trace(events) -> tuple:
    """Normalize to a non-empty tuple of AtomicEvent; strings are parsed."""
    out = []
    for ev in events:
        if isinstance(ev, AtomicEvent):
            out.append(ev)
        elif isinstance(ev, str):
            out.append(parse_ae_token(ev))
        else:
            raise TypeError(f"trace element is not an AtomicEvent: {ev!r}")
    if not out:
        raise ValueError("trace must be non-empty")
    return tuple(out)


def trace_to_indices(events) -> list[int]:
    return [ev.index for ev in events]
