"""Autocomplete: answers sync events with suggestions at the cursor."""

from __future__ import annotations

from ..changeset import Changeset
from ..protocol import Event
from ..service import ServiceRunner
from .spotter import TermDictionary

MACROS = ["\\STRcopy", "\\STRlabel", "\\begin", "\\end", "\\termref"]


def word_before(text: str, pos: int) -> str:
    """The \\macro or word fragment immediately left of the cursor."""
    pos = max(0, min(pos, len(text)))
    i = pos
    while i > 0 and (text[i - 1].isalnum() or text[i - 1] == "_"):
        i -= 1
    if i > 0 and text[i - 1] == "\\":
        i -= 1
    return text[i:pos]


def suggestions_for(text: str, pos: int, dictionary: TermDictionary | None) -> list[str]:
    prefix = word_before(text, pos)
    if not prefix:
        return []
    out = [m for m in MACROS if m.startswith(prefix) and m != prefix]
    if dictionary is not None and not prefix.startswith("\\"):
        low = prefix.lower()
        out.extend(
            s for s in sorted(dictionary.senses) if s.startswith(low) and s != low
        )
    return out


class Autocomplete:
    def __init__(self, dictionary: TermDictionary | None = None):
        self.dictionary = dictionary

    def on_change(self, runner: ServiceRunner, update: Changeset | None) -> None:
        pass  # purely event driven

    def on_event(self, runner: ServiceRunner, event: Event) -> list:
        if not event.uri.startswith("autocomplete."):
            return []
        try:
            pos = int(event.params.get("pos", "0"))
        except ValueError:
            return []
        with runner.lock:
            text = runner.doc.text
        return suggestions_for(text, pos, self.dictionary)
