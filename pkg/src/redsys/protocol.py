"""Wire protocol: newline-delimited JSON records over a byte stream.

Every message is one UTF-8 JSON object per line with a ``kind`` field and
the document id it concerns.  The same payload travels over raw TCP and
WebSocket text frames.  Encoding is deterministic (sorted keys) so message
logs are byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from .changeset import AttributePair, Changeset

ROLE_EDITOR = "editor"
ROLE_SERVICE = "service"

SYNC = "sync"
ASYNC = "async"


class DecodeError(Exception):
    """Raised for any undecodable input, with the byte offset of the fault."""

    def __init__(self, reason: str, offset: int = 0):
        super().__init__(f"{reason} (at byte {offset})")
        self.reason = reason
        self.offset = offset


@dataclass(frozen=True)
class Hello:
    doc_id: str
    client_id: str
    role: str
    subscriptions: tuple[str, ...] = ()
    require_existing: bool = False


@dataclass(frozen=True)
class Init:
    doc_id: str
    rev: int
    snapshot: Changeset
    pool: tuple[AttributePair, ...]


@dataclass(frozen=True)
class Submit:
    doc_id: str
    base_rev: int
    changeset: Changeset


@dataclass(frozen=True)
class Ack:
    doc_id: str
    new_rev: int


@dataclass(frozen=True)
class Reject:
    doc_id: str
    reason: str  # MergeConflict | Validation
    head_rev: int


@dataclass(frozen=True)
class Update:
    doc_id: str
    rev: int
    changeset: Changeset
    author_id: str


@dataclass(frozen=True)
class Event:
    doc_id: str
    uri: str
    params: Mapping[str, str] = field(default_factory=dict)
    mode: str = ASYNC
    correlation_id: str | None = None
    timeout_ms: int | None = None


@dataclass(frozen=True)
class EventResponse:
    doc_id: str
    correlation_id: str
    items: tuple[Any, ...] = ()


@dataclass(frozen=True)
class Error:
    doc_id: str
    code: str
    detail: str = ""


Message = Hello | Init | Submit | Ack | Reject | Update | Event | EventResponse | Error


def _to_record(msg: Message) -> dict:
    if isinstance(msg, Hello):
        rec = {
            "kind": "Hello",
            "docId": msg.doc_id,
            "clientId": msg.client_id,
            "role": msg.role,
            "subscriptions": list(msg.subscriptions),
        }
        if msg.require_existing:
            rec["requireExisting"] = True
        return rec
    if isinstance(msg, Init):
        return {
            "kind": "Init",
            "docId": msg.doc_id,
            "rev": msg.rev,
            "snapshot": msg.snapshot.to_wire(),
            "pool": [[k, v] for k, v in msg.pool],
        }
    if isinstance(msg, Submit):
        return {
            "kind": "Submit",
            "docId": msg.doc_id,
            "baseRev": msg.base_rev,
            "changeset": msg.changeset.to_wire(),
        }
    if isinstance(msg, Ack):
        return {"kind": "Ack", "docId": msg.doc_id, "newRev": msg.new_rev}
    if isinstance(msg, Reject):
        return {
            "kind": "Reject",
            "docId": msg.doc_id,
            "reason": msg.reason,
            "headRev": msg.head_rev,
        }
    if isinstance(msg, Update):
        return {
            "kind": "Update",
            "docId": msg.doc_id,
            "rev": msg.rev,
            "changeset": msg.changeset.to_wire(),
            "authorId": msg.author_id,
        }
    if isinstance(msg, Event):
        rec = {
            "kind": "Event",
            "docId": msg.doc_id,
            "uri": msg.uri,
            "params": dict(msg.params),
            "mode": msg.mode,
        }
        if msg.mode == SYNC:
            rec["correlationId"] = msg.correlation_id
            rec["timeoutMs"] = msg.timeout_ms
        return rec
    if isinstance(msg, EventResponse):
        return {
            "kind": "EventResponse",
            "docId": msg.doc_id,
            "correlationId": msg.correlation_id,
            "items": list(msg.items),
        }
    if isinstance(msg, Error):
        return {"kind": "Error", "docId": msg.doc_id, "code": msg.code, "detail": msg.detail}
    raise TypeError(f"not a protocol message: {msg!r}")


def encode(msg: Message) -> bytes:
    """One JSON line; deterministic field order."""
    return json.dumps(_to_record(msg), sort_keys=True, ensure_ascii=False).encode() + b"\n"


def _require(record: Mapping, key: str, types: type | tuple) -> Any:
    if key not in record:
        raise DecodeError(f"missing field {key!r}")
    value = record[key]
    if not isinstance(value, types):
        raise DecodeError(f"field {key!r} has wrong type {type(value).__name__}")
    return value


def _changeset_field(record: Mapping, key: str) -> Changeset:
    raw = _require(record, key, dict)
    try:
        return Changeset.from_wire(raw)
    except (ValueError, TypeError) as exc:
        raise DecodeError(f"bad changeset in {key!r}: {exc}") from exc


def _pairs_field(record: Mapping, key: str) -> tuple[AttributePair, ...]:
    raw = _require(record, key, list)
    out = []
    for item in raw:
        if not (isinstance(item, list) and len(item) == 2):
            raise DecodeError(f"field {key!r} must hold [key, value] pairs")
        out.append((str(item[0]), str(item[1])))
    return tuple(out)


def decode(line: bytes | str) -> Message:
    """Parse one line; raises DecodeError on anything malformed."""
    if isinstance(line, bytes):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("invalid UTF-8", exc.start) from exc
    else:
        text = line
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid JSON: {exc.msg}", exc.pos) from exc
    if not isinstance(record, dict):
        raise DecodeError("message must be a JSON object")
    kind = _require(record, "kind", str)
    doc_id = _require(record, "docId", str)
    try:
        if kind == "Hello":
            subs = _require(record, "subscriptions", list)
            return Hello(
                doc_id,
                _require(record, "clientId", str),
                _require(record, "role", str),
                tuple(str(s) for s in subs),
                bool(record.get("requireExisting", False)),
            )
        if kind == "Init":
            return Init(
                doc_id,
                int(_require(record, "rev", int)),
                _changeset_field(record, "snapshot"),
                _pairs_field(record, "pool"),
            )
        if kind == "Submit":
            return Submit(
                doc_id,
                int(_require(record, "baseRev", int)),
                _changeset_field(record, "changeset"),
            )
        if kind == "Ack":
            return Ack(doc_id, int(_require(record, "newRev", int)))
        if kind == "Reject":
            return Reject(
                doc_id,
                _require(record, "reason", str),
                int(_require(record, "headRev", int)),
            )
        if kind == "Update":
            return Update(
                doc_id,
                int(_require(record, "rev", int)),
                _changeset_field(record, "changeset"),
                _require(record, "authorId", str),
            )
        if kind == "Event":
            mode = _require(record, "mode", str)
            if mode not in (SYNC, ASYNC):
                raise DecodeError(f"unknown event mode {mode!r}")
            params = _require(record, "params", dict)
            correlation_id = None
            timeout_ms = None
            if mode == SYNC:
                correlation_id = _require(record, "correlationId", str)
                timeout_ms = int(_require(record, "timeoutMs", int))
            elif "correlationId" in record:
                raise DecodeError("async events must not carry a correlationId")
            return Event(
                doc_id,
                _require(record, "uri", str),
                {str(k): str(v) for k, v in params.items()},
                mode,
                correlation_id,
                timeout_ms,
            )
        if kind == "EventResponse":
            items = _require(record, "items", list)
            return EventResponse(doc_id, _require(record, "correlationId", str), tuple(items))
        if kind == "Error":
            return Error(doc_id, _require(record, "code", str), str(record.get("detail", "")))
    except DecodeError:
        raise
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"malformed {kind} message: {exc}") from exc
    raise DecodeError(f"unknown message kind {kind!r}")
