"""Semantic syntax highlighter: reactive, emits minimal attribute diffs.

Every document change triggers a full tokenize of the local mirror; the
token kinds become ``hl`` attribute range rules, swept into a full layer,
which is then diffed against the document's current ``hl`` layer so only
the ranges that actually changed go on the wire.
"""

from __future__ import annotations

from ..changeset import AttributeRangeRule, Changeset, Document, ranges_to_ops
from ..service import OwnedAttrLayer, ServiceRunner
from . import stex

HL_KEY = "hl"


def _kind_for(token: stex.StexToken) -> str | None:
    if token.kind == stex.COMMENT:
        return stex.COMMENT
    if token.kind == stex.COMMAND:
        return stex.COMMAND
    if token.kind in (stex.BEGIN_GROUP, stex.END_GROUP):
        return token.kind
    if token.kind == stex.MATH_DELIM or token.in_math:
        return stex.MATH_DELIM
    return None  # plain words and whitespace carry no highlight


def highlight_rules(text: str) -> list[AttributeRangeRule]:
    rules = []
    for token in stex.tokenize(text):
        kind = _kind_for(token)
        if kind is not None and token.end > token.start:
            rules.append(AttributeRangeRule(HL_KEY, kind, token.start, token.end - 1))
    return rules


def _target_cells(doc: Document) -> list[dict[str, str]]:
    """Full highlight layer, materialized through the range sweep."""
    full = ranges_to_ops(highlight_rules(doc.text), len(doc), doc.pool)
    cells: list[dict[str, str]] = [{} for _ in range(len(doc))]
    pool_entries = list(doc.pool.entries()) + list(full.new_pool)
    pos = 0
    for op in full.ops:
        if op.op == "=":
            for attr_id in op.attrs:
                key, value = pool_entries[attr_id]
                for i in range(pos, pos + op.n):
                    cells[i][key] = value
            pos += op.n
    return cells


def recompute(doc: Document, layer: OwnedAttrLayer) -> Changeset:
    """The diff that brings the document's hl layer up to date."""
    return layer.diff_to(_target_cells(doc), doc)


class Highlighter:
    """Service handler; reacts to every change synchronously."""

    def __init__(self) -> None:
        self.layer = OwnedAttrLayer(frozenset({HL_KEY}))

    def on_change(self, runner: ServiceRunner, update: Changeset | None) -> None:
        with runner.lock:
            rev, doc = runner.snapshot()
            if update is None:
                self.layer.reload_from(doc)
            else:
                self.layer.advance(update)
            cs = recompute(doc, self.layer)
            if not cs.is_identity():
                runner.submit(rev, cs)

    def on_reject(self, runner: ServiceRunner, reason: str) -> None:
        with runner.lock:
            rev, doc = runner.snapshot()
            self.layer.reload_from(doc)
            cs = recompute(doc, self.layer)
            if not cs.is_identity():
                runner.submit(rev, cs)
