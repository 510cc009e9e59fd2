"""Service SDK: connect, mirror the document, produce changes.

A service implements up to three hooks and hands itself to a
:class:`ServiceRunner`:

* ``on_change(runner)``      -- after init and after every processed update
* ``on_event(runner, event)``-- interaction events matching a subscription;
                                 return a list of items for sync events
* ``on_reject(runner, reason)`` -- an own submission was refused

Hooks run serialized on the runner's dispatch thread.  Long work belongs in
worker threads guarded by a :class:`ProcessingToken` so overlapping edits
cancel it; submissions may come from any thread and are queued one at a
time.
"""

from __future__ import annotations

import threading
from typing import Any, Protocol

from .changeset import Changeset, ChangesetBuilder, Document
from .net import PeerConnection
from .protocol import (
    Ack,
    Error,
    Event,
    EventResponse,
    Hello,
    Init,
    Message,
    Reject,
    Submit,
    Update,
)
from .session import ProcessingToken, ResyncNeeded, SyncSession


class ServiceHandler(Protocol):
    def on_change(self, runner: "ServiceRunner", update: Changeset | None) -> None: ...


class ServiceRunner:
    """Wires one service to a broker document over TCP."""

    def __init__(
        self,
        addr: str | tuple[str, int],
        doc_id: str,
        client_id: str,
        subscriptions: tuple[str, ...],
        handler: Any,
        transcript: list[str] | None = None,
    ):
        self.doc_id = doc_id
        self.client_id = client_id
        self.subscriptions = subscriptions
        self.handler = handler
        self.session = SyncSession()
        self.lock = threading.RLock()
        self.tokens: list[ProcessingToken] = []
        self._submit_queue: list[tuple[int, Changeset]] = []
        self._transcript = transcript
        self._stop = threading.Event()
        self._conn = PeerConnection.open(addr)
        self._ready = threading.Event()

    # -- lifecycle -----------------------------------------------------------

    def run(self) -> None:
        """Connect, then dispatch messages until stopped; blocks the caller."""
        self._send(
            Hello(self.doc_id, self.client_id, "service", self.subscriptions)
        )
        try:
            while not self._stop.is_set():
                msg = self._conn.recv(timeout=0.2)
                if msg is None:
                    if self._conn.closed and self._conn.inbox.empty():
                        break
                    continue
                self._dispatch(msg)
        finally:
            self._conn.close()

    def start_thread(self) -> threading.Thread:
        thread = threading.Thread(target=self.run, daemon=True, name=f"svc-{self.client_id}")
        thread.start()
        return thread

    def stop(self) -> None:
        self._stop.set()
        self._conn.close()

    @property
    def stopped(self) -> bool:
        return self._stop.is_set()

    def wait_ready(self, timeout: float = 10.0) -> None:
        if not self._ready.wait(timeout):
            raise TimeoutError(f"{self.client_id}: no Init received")

    # -- document access -----------------------------------------------------

    @property
    def doc(self) -> Document:
        with self.lock:
            doc = self.session.committed
            if doc is None:
                raise ResyncNeeded("not initialized")
            return doc

    @property
    def rev(self) -> int:
        with self.lock:
            return self.session.rev

    def snapshot(self) -> tuple[int, Document]:
        with self.lock:
            return self.session.rev, self.session.committed

    def new_token(self, ranges: list[tuple[int, int]]) -> ProcessingToken:
        """Register a token watching character ranges at the current rev."""
        with self.lock:
            token = ProcessingToken(self.session.rev, ranges)
            self.tokens.append(token)
            return token

    # -- outgoing ------------------------------------------------------------

    def submit(self, base_rev: int, cs: Changeset) -> None:
        """Queue a changeset based on ``base_rev``; one in flight at a time."""
        if cs.is_identity():
            return
        with self.lock:
            if self.session.sent is None:
                self._stage_and_send(base_rev, cs)
            else:
                self._submit_queue.append((base_rev, cs))

    def _stage_and_send(self, base_rev: int, cs: Changeset) -> None:
        self.session.submit_at(base_rev, cs)
        self._send(Submit(self.doc_id, base_rev, cs))

    def respond(self, correlation_id: str, items: list) -> None:
        self._send(EventResponse(self.doc_id, correlation_id, tuple(items)))

    def _send(self, msg: Message) -> None:
        if self._transcript is not None:
            from .protocol import encode

            self._transcript.append(">> " + encode(msg).decode().rstrip("\n"))
        try:
            self._conn.send(msg)
        except OSError:
            if not self._stop.is_set():
                raise

    # -- incoming ------------------------------------------------------------

    def _dispatch(self, msg: Message) -> None:
        if self._transcript is not None:
            from .protocol import encode

            self._transcript.append("<< " + encode(msg).decode().rstrip("\n"))
        if isinstance(msg, Init):
            with self.lock:
                self.session.init_state(msg.rev, msg.snapshot)
                for token in self.tokens:
                    token.cancelled = True  # old coordinates are meaningless now
                self.tokens = []
            self._ready.set()
            self._on_change(None)
        elif isinstance(msg, Update):
            with self.lock:
                pool = self.session.committed.pool
                for token in self.tokens:
                    token.observe(msg.changeset, pool)
                self.tokens = [t for t in self.tokens if not t.cancelled]
                self.session.handle_update(msg.rev, msg.changeset)
            self._on_change(msg.changeset)
        elif isinstance(msg, Ack):
            with self.lock:
                self.session.handle_ack(msg.new_rev)
                self._pump_queue()
        elif isinstance(msg, Reject):
            with self.lock:
                self.session.handle_reject()
                self._pump_queue()
            hook = getattr(self.handler, "on_reject", None)
            if hook is not None:
                hook(self, msg.reason)
        elif isinstance(msg, Event):
            hook = getattr(self.handler, "on_event", None)
            items = hook(self, msg) if hook is not None else None
            if msg.mode == "sync" and msg.correlation_id is not None:
                self.respond(msg.correlation_id, list(items or []))
        elif isinstance(msg, Error):
            hook = getattr(self.handler, "on_error", None)
            if hook is not None:
                hook(self, msg)

    def _pump_queue(self) -> None:
        if self._submit_queue and self.session.sent is None:
            base_rev, cs = self._submit_queue.pop(0)
            self._stage_and_send(base_rev, cs)

    def _on_change(self, update: Changeset | None) -> None:
        hook = getattr(self.handler, "on_change", None)
        if hook is not None:
            hook(self, update)


class OwnedAttrLayer:
    """A service's memory of the attribute pairs it emitted per character.

    Needed when several services write the same key (both folding services
    emit ``fold=hidden``): diffing against the live document would strip the
    other service's spans, so removals are computed against what this
    service itself set.  The layer is advanced positionally through every
    update; remote attribute changes do not alter it.
    """

    def __init__(self, keys: frozenset[str]):
        self.keys = keys
        self.cells: list[dict[str, str]] = []

    def reset(self, length: int) -> None:
        self.cells = [{} for _ in range(length)]

    def advance(self, cs: Changeset) -> None:
        out: list[dict[str, str]] = []
        pos = 0
        for op in cs.ops:
            if op.op == "+":
                out.extend({} for _ in range(op.n))
            elif op.op == "-":
                pos += op.n
            else:
                out.extend(self.cells[pos : pos + op.n])
                pos += op.n
        out.extend(self.cells[pos:])
        self.cells = out

    def reload_from(self, doc: Document) -> None:
        self.cells = [
            {k: v for k, v in doc.char_pairs(i) if k in self.keys}
            for i in range(len(doc))
        ]

    def diff_to(self, targets: list[dict[str, str]], doc: Document) -> Changeset:
        """Minimal attribute-only changeset moving this layer to ``targets``."""
        if len(self.cells) != len(doc):
            self.reset(len(doc))
        builder = ChangesetBuilder(len(doc), doc.pool)
        run_start = 0
        run_delta: dict[str, str] | None = None
        for i, target in enumerate(targets):
            cell = self.cells[i]
            if cell == target:
                delta: dict[str, str] = {}
            else:
                delta = {k: v for k, v in target.items() if cell.get(k) != v}
                for key in cell:
                    if key not in target:
                        delta[key] = ""
            if delta != run_delta:
                if run_delta is not None and i > run_start:
                    builder.keep(i - run_start, run_delta)
                run_start = i
                run_delta = delta
        if run_delta is not None and len(targets) > run_start:
            builder.keep(len(targets) - run_start, run_delta)
        cs = builder.finish()
        self.cells = [dict(t) for t in targets]
        return cs
