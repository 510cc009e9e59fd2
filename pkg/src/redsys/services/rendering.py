"""Reference renderer: how editors are expected to present fold/display."""

from __future__ import annotations

from ..changeset import Document
from .folding import DISPLAY_KEY, FOLD_HIDDEN, FOLD_KEY


def render_visible_text(doc: Document) -> str:
    """Drop fold=hidden characters, substitute display values in place."""
    out: list[str] = []
    for i in range(len(doc)):
        pairs = dict(doc.char_pairs(i))
        if DISPLAY_KEY in pairs:
            out.append(pairs[DISPLAY_KEY])
            continue
        if pairs.get(FOLD_KEY) == FOLD_HIDDEN:
            continue
        out.append(doc.text[i])
    return "".join(out)
