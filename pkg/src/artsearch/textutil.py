"""Text tokenization shared by keyword search and the text extractor.

One tokenizer for the whole system so that the inverted index, the
query parser, and the token-hash embedding all agree on word boundaries.
"""

from __future__ import annotations

import re

# Unicode word characters minus underscore; text is casefolded first.
# No stemming by design: a stemmer would make ranking locale-dependent
# and untestable against a simple linear-scan oracle.
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase word segmentation. Returns tokens in order of appearance."""
    return _WORD_RE.findall(text.casefold())


def token_counts(text: str) -> dict[str, int]:
    """Token -> occurrence count for one piece of text."""
    counts: dict[str, int] = {}
    for tok in tokenize(text):
        counts[tok] = counts.get(tok, 0) + 1
    return counts
