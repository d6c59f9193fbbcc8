import pytest

from cedgen.rules import builtin_rules


@pytest.fixture(scope="session")
def rules():
    return builtin_rules()


def trace_of(text: str):
    """Compact trace literal: space-separated tokens with ``xN`` repeats."""
    from cedgen.core import parse_ae_token

    out = []
    for part in text.split():
        if "*" in part:
            tok, n = part.split("*")
            out.extend([parse_ae_token(tok)] * int(n))
        else:
            out.append(parse_ae_token(part))
    return tuple(out)
