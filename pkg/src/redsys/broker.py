"""Broker core: per-document revision history, merge policy, snapshots.

This is the pure heart of the server.  It owns the shared documents,
serializes commits, transforms stale submissions across the revisions they
missed, and vetoes merges whose changes overlap.  Connection handling and
event fan-out live in :mod:`redsys.server`.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Callable

from .changeset import (
    Changeset,
    Document,
    ValidationError,
    apply_changeset,
    compose,
    follow,
    identity,
    insert_op,
    overlaps,
    snapshot_of,
    validate,
)


class BrokerError(Exception):
    code = "BrokerError"


class UnknownDoc(BrokerError):
    code = "UnknownDoc"


class DuplicateDocId(BrokerError):
    code = "DuplicateDocId"


class StaleBeyondHistory(BrokerError):
    code = "StaleBeyondHistory"


@dataclass(frozen=True)
class Revision:
    """A committed changeset in a document's history."""

    rev: int
    changeset: Changeset
    author_id: str
    timestamp_ms: int
    pool_len_before: int  # pool size the changeset's ids are based on

    def to_wire(self) -> dict:
        return {
            "rev": self.rev,
            "changeset": self.changeset.to_wire(),
            "authorId": self.author_id,
            "timestamp": self.timestamp_ms,
        }


@dataclass(frozen=True)
class Rejection:
    reason: str  # MergeConflict | Validation
    head_rev: int


class DocumentState:
    """One shared document: head, revision history, and bookkeeping."""

    def __init__(self, doc_id: str, head: Document, rev0: Revision):
        self.doc_id = doc_id
        self.head = head
        self.head_rev = 0
        self.history: list[Revision] = [rev0]

    @property
    def oldest_retained(self) -> int:
        return self.history[0].rev

    def revisions_after(self, base_rev: int) -> list[Revision]:
        if base_rev + 1 < self.oldest_retained:
            raise StaleBeyondHistory(
                f"rev {base_rev} predates retained history (oldest {self.oldest_retained})"
            )
        start = base_rev + 1 - self.oldest_retained
        return self.history[start:]

    def pool_len_at(self, rev: int) -> int:
        """Pool size right after ``rev`` was applied."""
        revisions = self.revisions_after(rev)
        return len(self.head.pool) - sum(len(r.changeset.new_pool) for r in revisions)


class Broker:
    """Holds every document, commits submissions, answers snapshots."""

    def __init__(
        self,
        log_dir: str | None = None,
        history_limit: int | None = None,
        clock_ms: Callable[[], int] | None = None,
    ):
        self._docs: dict[str, DocumentState] = {}
        self._log_dir = log_dir
        self._history_limit = history_limit
        self._clock_ms = clock_ms or (lambda: int(time.time() * 1000))
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

    def doc_ids(self) -> list[str]:
        return sorted(self._docs)

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def state(self, doc_id: str) -> DocumentState:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise UnknownDoc(f"no document {doc_id!r}") from None

    def open_document(self, doc_id: str, initial_text: str = "", author_id: str = "") -> DocumentState:
        """Create a document; revision 0 inserts the initial text into emptiness."""
        if doc_id in self._docs:
            raise DuplicateDocId(f"document {doc_id!r} already open")
        if initial_text:
            rev0_cs = Changeset(0, len(initial_text), (), (insert_op(initial_text),))
        else:
            rev0_cs = identity(0)
        head = apply_changeset(Document.from_text(""), rev0_cs)
        rev0 = Revision(0, rev0_cs, author_id, self._clock_ms(), 0)
        state = DocumentState(doc_id, head, rev0)
        self._docs[doc_id] = state
        self._log_revision(doc_id, rev0)
        return state

    def get_or_open(self, doc_id: str) -> DocumentState:
        if doc_id not in self._docs:
            return self.open_document(doc_id)
        return self._docs[doc_id]

    def submit(
        self, doc_id: str, author_id: str, base_rev: int, cs: Changeset
    ) -> Revision | Rejection:
        """Commit a changeset based on ``base_rev``.

        A stale change is transformed across every revision it missed, one
        at a time, unless the missed revisions overlap it, which rejects the
        merge and leaves all state untouched.
        """
        state = self.state(doc_id)
        if not 0 <= base_rev <= state.head_rev:
            raise StaleBeyondHistory(f"base rev {base_rev} not in [0, {state.head_rev}]")
        missed = state.revisions_after(base_rev)
        pool_len = state.pool_len_at(base_rev)
        base_pool = state.head.pool.prefix(pool_len)
        base_len = missed[0].changeset.base_len if missed else len(state.head)
        try:
            validate(cs, base_pool)
            if cs.base_len != base_len:
                raise ValidationError(
                    f"changeset base {cs.base_len} vs document length {base_len} at rev {base_rev}"
                )
        except ValidationError:
            return Rejection("Validation", state.head_rev)

        if missed:
            fused = missed[0].changeset
            for rev in missed[1:]:
                fused = compose(fused, rev.changeset, base_pool)
            if overlaps(fused, cs):
                return Rejection("MergeConflict", state.head_rev)
            current = cs
            for rev in missed:
                current = follow(
                    rev.changeset,
                    current,
                    True,
                    state.head.pool.prefix(rev.pool_len_before),
                )
        else:
            current = cs

        new_head = apply_changeset(state.head, current)
        committed = Revision(
            state.head_rev + 1, current, author_id, self._clock_ms(), len(state.head.pool)
        )
        state.head = new_head
        state.head_rev = committed.rev
        state.history.append(committed)
        if self._history_limit is not None and len(state.history) > self._history_limit:
            del state.history[: len(state.history) - self._history_limit]
        self._log_revision(doc_id, committed)
        return committed

    def snapshot_for(self, doc_id: str) -> tuple[int, Changeset, tuple]:
        """(head rev, changeset-from-empty reproducing head, pool entries)."""
        state = self.state(doc_id)
        return state.head_rev, snapshot_of(state.head), state.head.pool.entries()

    def match_subscriptions(self, uri: str, subscriptions: tuple[str, ...]) -> bool:
        return any(uri.startswith(prefix) for prefix in subscriptions)

    def _log_path(self, doc_id: str) -> str:
        assert self._log_dir is not None
        return os.path.join(self._log_dir, f"{doc_id}.log")

    def _log_revision(self, doc_id: str, rev: Revision) -> None:
        if not self._log_dir:
            return
        with open(self._log_path(doc_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rev.to_wire(), sort_keys=True, ensure_ascii=False) + "\n")


class CorruptLog(Exception):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


def replay_log(path: str) -> Document:
    """Fold a revision log from the empty document; verify rev contiguity."""
    doc = Document.from_text("")
    expected = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                rev = int(record["rev"])
                cs = Changeset.from_wire(record["changeset"])
            except (ValueError, KeyError, TypeError) as exc:
                raise CorruptLog(line_no, str(exc)) from exc
            if rev != expected:
                raise CorruptLog(line_no, f"expected rev {expected}, found {rev}")
            try:
                doc = apply_changeset(doc, cs)
            except ValidationError as exc:
                raise CorruptLog(line_no, f"changeset does not apply: {exc}") from exc
            expected += 1
    return doc


def replay_history(state: DocumentState) -> Document:
    """Re-apply the retained history from scratch (invariant checking)."""
    if state.oldest_retained != 0:
        raise StaleBeyondHistory("history was trimmed; full replay impossible")
    doc = Document.from_text("")
    for rev in state.history:
        doc = apply_changeset(doc, rev.changeset)
    return doc
