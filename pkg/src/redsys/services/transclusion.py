"""Transclusion: renders labeled snippets in place of their references."""

from __future__ import annotations

from ..changeset import Changeset, Document
from ..service import OwnedAttrLayer, ServiceRunner
from .folding import (
    DISPLAY_ERROR_KEY,
    DISPLAY_KEY,
    FOLD_HIDDEN,
    FOLD_KEY,
    parse_copies,
    parse_labels,
)


def build_label_table(text: str) -> dict[str, str]:
    """Label id -> body text; ids are case-sensitive, first definition wins."""
    table: dict[str, str] = {}
    for label, body in parse_labels(text):
        table.setdefault(label.label_id, body)
    return table


def transclusion_targets(doc: Document) -> list[dict[str, str]]:
    cells: list[dict[str, str]] = [{} for _ in range(len(doc))]
    text = doc.text
    table = build_label_table(text)
    for label, _body in parse_labels(text):
        # hide "\STRlabel[id]{" and the closing "}", keep the body visible
        for i in range(label.start, label.body_start):
            cells[i] = {FOLD_KEY: FOLD_HIDDEN}
        if label.body_end < len(doc):
            cells[label.body_end] = {FOLD_KEY: FOLD_HIDDEN}
    for copy in parse_copies(text):
        body = table.get(copy.label_id)
        if body is None:
            for i in range(copy.start, copy.end):
                cells[i] = {DISPLAY_ERROR_KEY: "unresolved"}
            continue
        for i in range(copy.start, copy.end):
            cells[i] = {FOLD_KEY: FOLD_HIDDEN}
        cells[copy.start] = {FOLD_KEY: FOLD_HIDDEN, DISPLAY_KEY: body}
    return cells


class Transclusion:
    def __init__(self) -> None:
        self.layer = OwnedAttrLayer(
            frozenset({FOLD_KEY, DISPLAY_KEY, DISPLAY_ERROR_KEY})
        )

    def recompute(self, doc: Document) -> Changeset:
        return self.layer.diff_to(transclusion_targets(doc), doc)

    def on_change(self, runner: ServiceRunner, update: Changeset | None) -> None:
        with runner.lock:
            rev, doc = runner.snapshot()
            if update is None:
                self.layer.reset(len(doc))
            else:
                self.layer.advance(update)
            cs = self.recompute(doc)
            if not cs.is_identity():
                runner.submit(rev, cs)

    def on_reject(self, runner: ServiceRunner, reason: str) -> None:
        with runner.lock:
            rev, doc = runner.snapshot()
            self.layer.reload_from(doc)
            cs = self.recompute(doc)
            if not cs.is_identity():
                runner.submit(rev, cs)
