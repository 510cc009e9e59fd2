"""Client-side document mirror with the committed / sent / pending discipline.

Every peer (editor or service) tracks the shared document the same way:

* ``committed`` -- the broker's document at ``rev``, advanced by Updates
  and by Acks of our own submissions,
* ``sent``      -- at most one changeset handed to the broker and not yet
  acknowledged, kept based on ``committed``,
* ``pending``   -- local edits not yet sent, based on committed + sent.

The displayed document is always committed + sent + pending.  Incoming
updates rebase ``sent``/``pending`` with ``follow`` using the same
earlier/later flags the broker uses, so the mirror lands on byte-identical
state without ever receiving its own changes back.
"""

from __future__ import annotations

from dataclasses import dataclass

from .changeset import (
    AttributePool,
    AttributeRangeRule,
    Changeset,
    ChangesetBuilder,
    Document,
    _StackedPool,
    apply_changeset,
    compose,
    follow,
    overlaps,
    ranges_to_ops,
    rebase_pool,
    transform_spans,
)


class ResyncNeeded(Exception):
    """A revision gap or rejection requires a fresh Init."""


@dataclass
class _RingEntry:
    rev: int
    changeset: Changeset
    pool_len_before: int


class SyncSession:
    """Pure state machine; feed it Init/Update/Ack/Reject, read documents."""

    def __init__(self, history_size: int = 512):
        self.committed: Document | None = None
        self.rev = -1
        self.sent: Changeset | None = None
        self.pending: Changeset | None = None
        self._ring: list[_RingEntry] = []
        self._history_size = history_size

    @property
    def ready(self) -> bool:
        return self.committed is not None

    def init_state(self, rev: int, snapshot: Changeset) -> None:
        self.committed = apply_changeset(Document.from_text(""), snapshot)
        self.rev = rev
        self.sent = None
        self.pending = None
        self._ring = []

    def display_doc(self) -> Document:
        """committed + sent + pending, the locally visible document."""
        doc = self._require_doc()
        if self.sent is not None:
            doc = apply_changeset(doc, self.sent)
        if self.pending is not None and not self.pending.is_identity():
            doc = apply_changeset(doc, self.pending)
        return doc

    def _require_doc(self) -> Document:
        if self.committed is None:
            raise ResyncNeeded("session not initialized")
        return self.committed

    def _pool_after_sent(self) -> AttributePool | _StackedPool:
        pool = self._require_doc().pool
        if self.sent is None:
            return pool
        return _StackedPool(pool, self.sent.new_pool)

    def local_edit(self, cs: Changeset) -> None:
        """Fold an edit (based on the display doc) into the pending buffer."""
        self._require_doc()
        if self.pending is None or self.pending.is_identity():
            self.pending = cs
        else:
            self.pending = compose(self.pending, cs, self._pool_after_sent())

    def take_submit(self) -> tuple[int, Changeset] | None:
        """Promote pending to sent if the wire is free; returns (baseRev, cs)."""
        if self.sent is not None or self.pending is None or self.pending.is_identity():
            return None
        self.sent = self.pending
        self.pending = None
        return self.rev, self.sent

    def submit_at(self, base_rev: int, cs: Changeset) -> tuple[int, Changeset]:
        """Stage a changeset based on an older revision (service results).

        The change is transformed across every update received since
        ``base_rev`` (exactly as the broker will transform it) and parked in
        the sent slot.  Returns what must go on the wire: the original pair,
        since the broker performs the same transformation itself.
        """
        doc = self._require_doc()
        if self.sent is not None:
            raise RuntimeError("a submission is already in flight")
        if base_rev > self.rev:
            raise ResyncNeeded(f"submit based on future rev {base_rev}")
        if base_rev < self.rev and (not self._ring or self._ring[0].rev > base_rev + 1):
            raise ResyncNeeded(f"rev {base_rev} predates the local history ring")
        current = cs
        for entry in self._ring:
            if entry.rev <= base_rev:
                continue
            current = follow(
                entry.changeset, current, True, doc.pool.prefix(entry.pool_len_before)
            )
        self.sent = current
        return base_rev, cs

    def handle_update(self, rev: int, cs: Changeset) -> Changeset:
        """Advance committed by a broadcast revision; rebase sent/pending.

        Returns the update as it applies to the display document (after the
        sent buffer), which is what UI layers need for caret handling.
        """
        doc = self._require_doc()
        if rev != self.rev + 1:
            raise ResyncNeeded(f"expected rev {self.rev + 1}, received {rev}")
        pool = doc.pool
        self._ring.append(_RingEntry(rev, cs, len(pool)))
        if len(self._ring) > self._history_size:
            self._ring.pop(0)

        update_for_display = cs
        if self.sent is not None:
            old_chain = _StackedPool(pool, self.sent.new_pool)
            update_for_display = follow(self.sent, cs, False, pool)
            new_sent = follow(cs, self.sent, True, pool)
            if self.pending is not None and not self.pending.is_identity():
                moved = follow(
                    update_for_display,
                    self.pending,
                    True,
                    old_chain,
                )
                # moved is expressed against committed+sent+update ids;
                # normalize onto the new committed+sent chain
                from_pool = _StackedPool(
                    pool, self.sent.new_pool, update_for_display.new_pool
                )
                to_pool = _StackedPool(pool, cs.new_pool, new_sent.new_pool)
                self.pending = rebase_pool(moved, from_pool, to_pool)
            self.sent = new_sent
        elif self.pending is not None and not self.pending.is_identity():
            self.pending = follow(cs, self.pending, True, pool)
        self.committed = apply_changeset(doc, cs)
        self.rev = rev
        return update_for_display

    def handle_ack(self, new_rev: int) -> None:
        """Our sent changeset was committed as ``new_rev``."""
        doc = self._require_doc()
        if self.sent is None:
            raise ResyncNeeded("ack with nothing in flight")
        if new_rev != self.rev + 1:
            raise ResyncNeeded(f"ack for rev {new_rev}, expected {self.rev + 1}")
        self._ring.append(_RingEntry(new_rev, self.sent, len(doc.pool)))
        if len(self._ring) > self._history_size:
            self._ring.pop(0)
        self.committed = apply_changeset(doc, self.sent)
        self.rev = new_rev
        self.sent = None

    def handle_reject(self) -> None:
        """Drop the in-flight changeset; pending (if any) now needs a re-diff."""
        self.sent = None


class ProcessingToken:
    """Tracks whether edits invalidated a long-running computation.

    The token watches half-open character ranges captured at ``start_rev``.
    Each update either cancels the token (the update overlaps a watched
    range) or shifts the ranges to the new revision.
    """

    def __init__(self, start_rev: int, ranges: list[tuple[int, int]]):
        self.start_rev = start_rev
        self.ranges = [(lo, hi) for lo, hi in ranges if lo < hi]
        self.cancelled = False

    def observe(self, cs: Changeset, pool) -> None:
        if self.cancelled or not self.ranges:
            return
        rules = [
            AttributeRangeRule("\x00watch", "1", lo, hi - 1) for lo, hi in self.ranges
        ]
        marker = ranges_to_ops(rules, cs.base_len, pool)
        if overlaps(cs, marker):
            self.cancelled = True
            return
        self.ranges = transform_spans(self.ranges, cs, pool)


def diff_documents(before: str, after: str, pool) -> Changeset:
    """Text-only diff via common prefix/suffix; used to re-seed after resync."""
    prefix = 0
    limit = min(len(before), len(after))
    while prefix < limit and before[prefix] == after[prefix]:
        prefix += 1
    suffix = 0
    while (
        suffix < limit - prefix
        and before[len(before) - 1 - suffix] == after[len(after) - 1 - suffix]
    ):
        suffix += 1
    builder = ChangesetBuilder(len(before), pool)
    if prefix:
        builder.keep(prefix)
    removed = len(before) - prefix - suffix
    if removed:
        builder.remove(removed)
    builder.insert(after[prefix : len(after) - suffix])
    return builder.finish()
