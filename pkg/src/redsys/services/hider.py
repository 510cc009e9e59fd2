"""Annotation hider: folds \\termref wrappers so only display text shows."""

from __future__ import annotations

from ..changeset import Changeset, Document
from ..service import OwnedAttrLayer, ServiceRunner
from .folding import FOLD_HIDDEN, FOLD_KEY, parse_termrefs


def hide_targets(doc: Document) -> list[dict[str, str]]:
    cells: list[dict[str, str]] = [{} for _ in range(len(doc))]
    for ref in parse_termrefs(doc.text):
        for i in range(ref.start, ref.body_start):  # "\termref{...}{"
            cells[i] = {FOLD_KEY: FOLD_HIDDEN}
        for i in range(ref.body_end, min(ref.body_end + 1, len(doc))):  # "}"
            cells[i] = {FOLD_KEY: FOLD_HIDDEN}
    return cells


class Hider:
    """Folds annotation wrappers; keeps its own fold spans separate from
    the transclusion service's."""

    def __init__(self) -> None:
        self.layer = OwnedAttrLayer(frozenset({FOLD_KEY}))

    def recompute(self, doc: Document) -> Changeset:
        return self.layer.diff_to(hide_targets(doc), doc)

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
