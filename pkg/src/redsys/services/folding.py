"""Markup parsing shared by the folding services.

``\\termref{args}{display text}`` wrappers fold away so only the display
text shows; ``\\STRlabel[id]{body}`` defines a reusable snippet rendered in
place (its wrapper folds); ``\\STRcopy{id}`` folds entirely and renders the
label's body through the ``display`` attribute.  Malformed constructs are
left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

FOLD_KEY = "fold"
FOLD_HIDDEN = "hidden"
DISPLAY_KEY = "display"
DISPLAY_ERROR_KEY = "display-error"


def _match_group(text: str, open_index: int) -> int | None:
    """Index just past the brace group opening at ``open_index``, or None."""
    if open_index >= len(text) or text[open_index] != "{":
        return None
    depth = 0
    i = open_index
    while i < len(text):
        c = text[i]
        if c == "\\":
            i += 2
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return None


@dataclass(frozen=True)
class TermRef:
    start: int  # at the backslash
    args_end: int  # just past the first group's closing brace
    body_start: int  # first char of the display text
    body_end: int  # at the closing brace of the second group


def parse_termrefs(text: str) -> list[TermRef]:
    out = []
    search = 0
    while True:
        start = text.find("\\termref{", search)
        if start < 0:
            return out
        search = start + 1
        args_end = _match_group(text, start + len("\\termref"))
        if args_end is None:
            continue
        body_close = _match_group(text, args_end)
        if body_close is None or text[args_end] != "{":
            continue
        out.append(TermRef(start, args_end, args_end + 1, body_close - 1))
        search = body_close


@dataclass(frozen=True)
class Label:
    start: int
    label_id: str
    body_start: int
    body_end: int  # at the closing brace

    @property
    def body(self) -> str:
        return ""


@dataclass(frozen=True)
class Copy:
    start: int
    end: int  # just past the closing brace
    label_id: str


def parse_labels(text: str) -> list[tuple[Label, str]]:
    out = []
    search = 0
    while True:
        start = text.find("\\STRlabel[", search)
        if start < 0:
            return out
        search = start + 1
        id_end = text.find("]", start + len("\\STRlabel["))
        if id_end < 0:
            continue
        label_id = text[start + len("\\STRlabel[") : id_end]
        group_end = _match_group(text, id_end + 1)
        if group_end is None:
            continue
        label = Label(start, label_id, id_end + 2, group_end - 1)
        out.append((label, text[label.body_start : label.body_end]))
        search = group_end


def parse_copies(text: str) -> list[Copy]:
    out = []
    search = 0
    while True:
        start = text.find("\\STRcopy{", search)
        if start < 0:
            return out
        search = start + 1
        group_end = _match_group(text, start + len("\\STRcopy"))
        if group_end is None:
            continue
        out.append(Copy(start, group_end, text[start + len("\\STRcopy{") : group_end - 1]))
        search = group_end
