"""Headless scripted editor: drives the full editor workflow for tests/demos.

A script is a newline-separated command list (``#`` starts a comment):

    insert POS "TEXT"          fold an insertion into the pending buffer
    delete POS LEN             delete characters
    attr POS LEN KEY "VALUE"   apply one attribute pair to a range
    wait MS                    keep processing messages for a while
    expectText "TEXT"          fail unless the displayed text matches
    expectAttr POS KEY "VALUE" fail unless the char carries the pair ("" = absent)
    event URI sync|async {"k": "v"}   trigger an interaction URI

The client maintains the committed/sent/pending buffers and logs every wire
message, producing a deterministic transcript for golden comparisons.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from .changeset import ChangesetBuilder
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
    Update,
    encode,
)
from .session import SyncSession, diff_documents


class ScriptError(Exception):
    pass


class ExpectationFailed(Exception):
    pass


@dataclass(frozen=True)
class Command:
    name: str
    args: tuple

    def __str__(self) -> str:
        return " ".join([self.name, *[json.dumps(a) if isinstance(a, (str, dict)) else str(a) for a in self.args]])


def parse_script(text: str) -> list[Command]:
    commands = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            commands.append(_parse_line(line))
        except (ValueError, json.JSONDecodeError) as exc:
            raise ScriptError(f"line {line_no}: {exc}") from exc
    return commands


def _parse_line(line: str) -> Command:
    head, _, rest = line.partition(" ")
    rest = rest.strip()
    if head == "insert":
        pos, text = rest.split(maxsplit=1)
        return Command("insert", (int(pos), json.loads(text)))
    if head == "delete":
        pos, length = rest.split()
        return Command("delete", (int(pos), int(length)))
    if head == "attr":
        pos, length, key, value = rest.split(maxsplit=3)
        return Command("attr", (int(pos), int(length), key, json.loads(value)))
    if head == "wait":
        return Command("wait", (int(rest),))
    if head == "expectText":
        return Command("expectText", (json.loads(rest),))
    if head == "expectAttr":
        pos, key, value = rest.split(maxsplit=2)
        return Command("expectAttr", (int(pos), key, json.loads(value)))
    if head == "event":
        uri, mode, params = rest.split(maxsplit=2)
        if mode not in ("sync", "async"):
            raise ValueError(f"event mode must be sync or async, not {mode!r}")
        return Command("event", (uri, mode, json.loads(params)))
    raise ValueError(f"unknown command {head!r}")


class EditorClient:
    """One connected scripted editor."""

    def __init__(
        self,
        addr: str | tuple[str, int],
        doc_id: str,
        user: str,
        transcript: list[str] | None = None,
        event_timeout_ms: int = 2000,
    ):
        self.doc_id = doc_id
        self.user = user
        self.session = SyncSession()
        self.transcript = transcript if transcript is not None else []
        self.event_timeout_ms = event_timeout_ms
        self._corr = 0
        self._conn = PeerConnection.open(addr)
        self._hello()

    # -- wire ----------------------------------------------------------------

    def _log(self, direction: str, msg: Message) -> None:
        self.transcript.append(direction + " " + encode(msg).decode().rstrip("\n"))

    def _send(self, msg: Message) -> None:
        self._log(">>", msg)
        self._conn.send(msg)

    def _recv(self, timeout: float) -> Message | None:
        msg = self._conn.recv(timeout=timeout)
        if msg is not None:
            self._log("<<", msg)
        return msg

    def _hello(self) -> None:
        self._send(Hello(self.doc_id, self.user, "editor"))
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            msg = self._recv(timeout=0.5)
            if isinstance(msg, Init):
                self.session.init_state(msg.rev, msg.snapshot)
                return
            if isinstance(msg, Error):
                raise ScriptError(f"broker error during hello: {msg.code} {msg.detail}")
        raise ScriptError("no Init from broker")

    def close(self) -> None:
        self._conn.close()

    # -- message pump ----------------------------------------------------------

    def _handle(self, msg: Message) -> None:
        if isinstance(msg, Update):
            self.session.handle_update(msg.rev, msg.changeset)
        elif isinstance(msg, Ack):
            self.session.handle_ack(msg.new_rev)
            self._flush()
        elif isinstance(msg, Reject):
            self._resync()
        elif isinstance(msg, (EventResponse, Error)):
            pass  # logged already; event waits match on correlation id
        elif isinstance(msg, Init):
            self.session.init_state(msg.rev, msg.snapshot)

    def _resync(self) -> None:
        display_text = self.session.display_doc().text
        self.session.handle_reject()
        self._send(Hello(self.doc_id, self.user, "editor"))
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            msg = self._recv(timeout=0.5)
            if isinstance(msg, Init):
                self.session.init_state(msg.rev, msg.snapshot)
                break
            if msg is None:
                continue
            # pre-resync traffic: superseded by the fresh snapshot
        else:
            raise ScriptError("no Init after resync")
        committed = self.session.committed
        cs = diff_documents(committed.text, display_text, committed.pool)
        if not cs.is_identity():
            self.session.local_edit(cs)
            self._flush()

    def _flush(self) -> None:
        staged = self.session.take_submit()
        if staged is not None:
            base_rev, cs = staged
            from .protocol import Submit

            self._send(Submit(self.doc_id, base_rev, cs))

    def pump(self, duration: float = 0.0) -> None:
        """Handle incoming traffic for ``duration`` seconds (0 = just drain)."""
        deadline = time.monotonic() + duration
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                while True:  # drain whatever is already queued
                    msg = self._conn.recv(timeout=0)
                    if msg is None:
                        return
                    self._handle(msg)
            msg = self._recv(timeout=min(remaining, 0.05))
            if msg is not None:
                self._handle(msg)

    # -- commands ---------------------------------------------------------------

    def insert(self, pos: int, text: str) -> None:
        doc = self.session.display_doc()
        builder = ChangesetBuilder(len(doc), doc.pool)
        if pos:
            builder.keep(pos)
        builder.insert(text)
        self.session.local_edit(builder.finish())
        self._flush()

    def delete(self, pos: int, length: int) -> None:
        doc = self.session.display_doc()
        builder = ChangesetBuilder(len(doc), doc.pool)
        if pos:
            builder.keep(pos)
        builder.remove(length)
        self.session.local_edit(builder.finish())
        self._flush()

    def attr(self, pos: int, length: int, key: str, value: str) -> None:
        doc = self.session.display_doc()
        builder = ChangesetBuilder(len(doc), doc.pool)
        if pos:
            builder.keep(pos)
        builder.keep(length, {key: value})
        self.session.local_edit(builder.finish())
        self._flush()

    def expect_text(self, expected: str) -> None:
        self.pump(0)
        actual = self.session.display_doc().text
        if actual != expected:
            raise ExpectationFailed(f"text is {actual!r}, expected {expected!r}")

    def expect_attr(self, pos: int, key: str, value: str) -> None:
        self.pump(0)
        doc = self.session.display_doc()
        if pos >= len(doc):
            raise ExpectationFailed(f"position {pos} beyond document end {len(doc)}")
        actual = dict(doc.char_pairs(pos)).get(key, "")
        if actual != value:
            raise ExpectationFailed(
                f"char {pos} has {key}={actual!r}, expected {value!r}"
            )

    def send_event(self, uri: str, mode: str, params: dict) -> tuple | None:
        if mode == "async":
            self._send(Event(self.doc_id, uri, params, "async"))
            return None
        self._corr += 1
        corr = f"c{self._corr}"
        self._send(Event(self.doc_id, uri, params, "sync", corr, self.event_timeout_ms))
        deadline = time.monotonic() + self.event_timeout_ms / 1000.0 + 5
        while time.monotonic() < deadline:
            msg = self._recv(timeout=0.5)
            if msg is None:
                continue
            if isinstance(msg, EventResponse) and msg.correlation_id == corr:
                return msg.items
            if isinstance(msg, Error):
                raise ExpectationFailed(f"event failed: {msg.code} {msg.detail}")
            self._handle(msg)
        raise ExpectationFailed(f"no response for sync event {uri}")

    def run_script(self, commands: list[Command]) -> None:
        for cmd in commands:
            self.transcript.append("## " + str(cmd))
            if cmd.name == "insert":
                self.insert(*cmd.args)
            elif cmd.name == "delete":
                self.delete(*cmd.args)
            elif cmd.name == "attr":
                self.attr(*cmd.args)
            elif cmd.name == "wait":
                self.pump(cmd.args[0] / 1000.0)
            elif cmd.name == "expectText":
                self.expect_text(*cmd.args)
            elif cmd.name == "expectAttr":
                self.expect_attr(*cmd.args)
            elif cmd.name == "event":
                self.send_event(*cmd.args)


def run_client(
    script_text: str,
    addr: str | tuple[str, int],
    doc_id: str,
    user: str = "client",
    transcript: list[str] | None = None,
) -> int:
    """Execute a script; returns the process exit code."""
    from .changeset import ValidationError
    from .session import ResyncNeeded

    commands = parse_script(script_text)
    client = EditorClient(addr, doc_id, user, transcript)
    try:
        client.run_script(commands)
    except ExpectationFailed as exc:
        client.transcript.append(f"!! {exc}")
        return 1
    except (ValidationError, ResyncNeeded, ScriptError, OSError) as exc:
        client.transcript.append(f"!! {type(exc).__name__}: {exc}")
        return 1
    finally:
        client.pump(0.05)
        client.close()
    return 0


def dump_document(addr: str | tuple[str, int], doc_id: str, with_attrs: bool = False) -> str:
    """Fetch the current document; annotated with [k=v] span markers on demand."""
    conn = PeerConnection.open(addr)
    try:
        conn.send(Hello(doc_id, "dump", "editor", (), require_existing=True))
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            msg = conn.recv(timeout=0.5)
            if isinstance(msg, Init):
                session = SyncSession()
                session.init_state(msg.rev, msg.snapshot)
                doc = session.committed
                if not with_attrs:
                    return doc.text
                return annotate_text(doc)
            if isinstance(msg, Error):
                raise ScriptError(f"{msg.code}: {msg.detail}")
        raise ScriptError("no Init from broker")
    finally:
        conn.close()


def annotate_text(doc) -> str:
    out = []
    i = 0
    n = len(doc)
    while i < n:
        j = i
        pairs = doc.char_pairs(i)
        while j < n and doc.char_pairs(j) == pairs:
            j += 1
        if pairs:
            label = ",".join(f"{k}={v}" for k, v in sorted(pairs))
            out.append(f"[{label}]{doc.text[i:j]}[/]")
        else:
            out.append(doc.text[i:j])
        i = j
    return "".join(out)
