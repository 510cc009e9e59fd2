"""Network front end: serves the broker over TCP lines and WebSocket frames.

One asyncio loop owns all connections and the broker, so commits to a
document are handled strictly in arrival order and every peer receives
updates in commit order.  Sync events fan out to matching services and
aggregate answers until everyone replied or the deadline passed.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
import threading
from dataclasses import dataclass, field

from . import protocol
from .broker import Broker, BrokerError, Rejection, UnknownDoc
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
    decode,
    encode,
)

log = logging.getLogger("redsys.server")


@dataclass
class _Peer:
    client_id: str
    role: str
    doc_id: str
    subscriptions: tuple[str, ...]
    outbox: asyncio.Queue = field(default_factory=asyncio.Queue)
    order: int = 0

    def send(self, msg: Message) -> None:
        self.outbox.put_nowait(msg)


@dataclass
class _PendingEvent:
    requester: _Peer
    doc_id: str
    correlation_id: str  # the requester's id
    waiting: dict[str, _Peer]  # broker-side correlation -> service
    order: list[str]  # broker-side correlations in service connection order
    items: dict[str, list]
    timer: asyncio.TimerHandle | None = None
    done: bool = False

    def collected(self) -> tuple:
        out: list = []
        for corr in self.order:
            out.extend(self.items.get(corr, []))
        return tuple(out)


class BrokerServer:
    """Bind, accept, and glue the wire protocol to a Broker."""

    def __init__(
        self,
        broker: Broker,
        host: str = "127.0.0.1",
        port: int = 0,
        ws_host: str | None = None,
        ws_port: int | None = None,
    ):
        self.broker = broker
        self._host = host
        self._port = port
        self._ws_host = ws_host
        self._ws_port = ws_port
        self._peers: dict[str, list[_Peer]] = {}  # doc_id -> connection order
        self._pending: dict[str, _PendingEvent] = {}  # broker corr -> aggregation
        self._counter = 0
        self._server: asyncio.AbstractServer | None = None
        self._ws_server = None
        self._conn_tasks: set[asyncio.Task] = set()
        self.tcp_address: tuple[str, int] | None = None
        self.ws_address: tuple[str, int] | None = None

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._handle_tcp, self._host, self._port)
        sock = self._server.sockets[0]
        self.tcp_address = sock.getsockname()[:2]
        if self._ws_host is not None:
            import websockets.asyncio.server as ws_server

            self._ws_server = await ws_server.serve(
                self._handle_ws, self._ws_host, self._ws_port or 0
            )
            ws_sock = next(iter(self._ws_server.sockets))
            self.ws_address = ws_sock.getsockname()[:2]
        log.info("listening on tcp %s ws %s", self.tcp_address, self.ws_address)

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        for task in list(self._conn_tasks):
            task.cancel()
        if self._conn_tasks:
            await asyncio.gather(*self._conn_tasks, return_exceptions=True)

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    # -- connection handling ------------------------------------------------

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = _Peer("?", "editor", "", ())
        self._conn_tasks.add(asyncio.current_task())

        async def pump_out():
            while True:
                msg = await peer.outbox.get()
                if msg is None:
                    break
                writer.write(encode(msg))
                await writer.drain()

        out_task = asyncio.ensure_future(pump_out())
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                self._dispatch_line(peer, line)
        except (ConnectionError, asyncio.IncompleteReadError, asyncio.CancelledError):
            pass
        finally:
            self._conn_tasks.discard(asyncio.current_task())
            self._unregister(peer)
            peer.outbox.put_nowait(None)
            with contextlib.suppress(Exception):
                await out_task
            writer.close()
            with contextlib.suppress(Exception):
                await writer.wait_closed()

    async def _handle_ws(self, socket):
        peer = _Peer("?", "editor", "", ())
        self._conn_tasks.add(asyncio.current_task())

        async def pump_out():
            while True:
                msg = await peer.outbox.get()
                if msg is None:
                    break
                await socket.send(encode(msg).decode().rstrip("\n"))

        out_task = asyncio.ensure_future(pump_out())
        try:
            async for frame in socket:
                self._dispatch_line(peer, frame if isinstance(frame, bytes) else frame.encode())
        except Exception:
            pass
        finally:
            self._conn_tasks.discard(asyncio.current_task())
            self._unregister(peer)
            peer.outbox.put_nowait(None)
            with contextlib.suppress(Exception):
                await out_task

    def _dispatch_line(self, peer: _Peer, line: bytes) -> None:
        try:
            msg = decode(line)
        except protocol.DecodeError as exc:
            peer.send(Error(peer.doc_id, "DecodeError", str(exc)))
            return
        try:
            self._dispatch(peer, msg)
        except BrokerError as exc:
            peer.send(Error(msg.doc_id, exc.code, str(exc)))
        except Exception as exc:  # never kill the loop on one bad message
            log.exception("error handling %s", type(msg).__name__)
            peer.send(Error(msg.doc_id, "InternalError", str(exc)))

    # -- message semantics ---------------------------------------------------

    def _dispatch(self, peer: _Peer, msg: Message) -> None:
        if isinstance(msg, Hello):
            self._on_hello(peer, msg)
        elif isinstance(msg, Submit):
            self._on_submit(peer, msg)
        elif isinstance(msg, Event):
            self._on_event(peer, msg)
        elif isinstance(msg, EventResponse):
            self._on_event_response(peer, msg)
        else:
            peer.send(Error(msg.doc_id, "UnexpectedMessage", type(msg).__name__))

    def _on_hello(self, peer: _Peer, msg: Hello) -> None:
        if msg.require_existing and not self.broker.has_document(msg.doc_id):
            raise UnknownDoc(f"no document {msg.doc_id!r}")
        self.broker.get_or_open(msg.doc_id)
        self._unregister(peer)
        peer.client_id = msg.client_id
        peer.role = msg.role
        peer.doc_id = msg.doc_id
        peer.subscriptions = msg.subscriptions
        self._counter += 1
        peer.order = self._counter
        self._peers.setdefault(msg.doc_id, []).append(peer)
        rev, snapshot, pool = self.broker.snapshot_for(msg.doc_id)
        peer.send(Init(msg.doc_id, rev, snapshot, pool))

    def _on_submit(self, peer: _Peer, msg: Submit) -> None:
        outcome = self.broker.submit(msg.doc_id, peer.client_id, msg.base_rev, msg.changeset)
        if isinstance(outcome, Rejection):
            peer.send(Reject(msg.doc_id, outcome.reason, outcome.head_rev))
            return
        peer.send(Ack(msg.doc_id, outcome.rev))
        update = Update(msg.doc_id, outcome.rev, outcome.changeset, outcome.author_id)
        for other in self._peers.get(msg.doc_id, []):
            if other is not peer:
                other.send(update)

    def _matching_services(self, doc_id: str, uri: str, sender: _Peer) -> list[_Peer]:
        out = []
        for candidate in self._peers.get(doc_id, []):
            if candidate is sender or candidate.role != protocol.ROLE_SERVICE:
                continue
            if self.broker.match_subscriptions(uri, candidate.subscriptions):
                out.append(candidate)
        return out

    def _on_event(self, requester: _Peer, msg: Event) -> None:
        if not self.broker.has_document(msg.doc_id):
            raise UnknownDoc(f"no document {msg.doc_id!r}")
        matched = self._matching_services(msg.doc_id, msg.uri, requester)
        if msg.mode == protocol.ASYNC:
            for service in matched:
                service.send(msg)
            return
        if not matched:
            requester.send(Error(msg.doc_id, "NoSubscriber", msg.uri))
            return
        pending = _PendingEvent(requester, msg.doc_id, msg.correlation_id or "", {}, [], {})
        for service in matched:
            self._counter += 1
            broker_corr = f"s{self._counter}"
            pending.waiting[broker_corr] = service
            pending.order.append(broker_corr)
            self._pending[broker_corr] = pending
            service.send(
                Event(msg.doc_id, msg.uri, msg.params, protocol.SYNC, broker_corr, msg.timeout_ms)
            )
        loop = asyncio.get_running_loop()
        timeout = (msg.timeout_ms or 1000) / 1000.0
        pending.timer = loop.call_later(timeout, self._finish_event, pending)

    def _on_event_response(self, peer: _Peer, msg: EventResponse) -> None:
        pending = self._pending.get(msg.correlation_id)
        if pending is None:
            return  # late or duplicate answer: dropped
        if pending.waiting.pop(msg.correlation_id, None) is None:
            return
        del self._pending[msg.correlation_id]
        pending.items[msg.correlation_id] = list(msg.items)
        if not pending.waiting:
            self._finish_event(pending)

    def _finish_event(self, pending: _PendingEvent) -> None:
        if pending.done:
            return
        pending.done = True
        if pending.timer is not None:
            pending.timer.cancel()
            pending.timer = None
        for broker_corr in list(pending.waiting):
            pending.waiting.pop(broker_corr, None)
            self._pending.pop(broker_corr, None)
        pending.requester.send(
            EventResponse(pending.doc_id, pending.correlation_id, pending.collected())
        )

    def _unregister(self, peer: _Peer) -> None:
        peers = self._peers.get(peer.doc_id)
        if peers and peer in peers:
            peers.remove(peer)
        # a vanished service counts as an empty answer
        for broker_corr, pending in list(self._pending.items()):
            if pending.waiting.get(broker_corr) is peer:
                del pending.waiting[broker_corr]
                del self._pending[broker_corr]
                if not pending.waiting:
                    self._finish_event(pending)


class ServerThread:
    """Runs a BrokerServer on a dedicated event loop thread."""

    def __init__(self, broker: Broker, ws: bool = False, host: str = "127.0.0.1", port: int = 0,
                 ws_host: str = "127.0.0.1", ws_port: int = 0):
        self.server = BrokerServer(
            broker, host, port, ws_host if ws else None, ws_port if ws else None
        )
        self._loop = asyncio.new_event_loop()
        self._started = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self) -> None:
        asyncio.set_event_loop(self._loop)
        self._loop.run_until_complete(self.server.start())
        self._started.set()
        self._loop.run_forever()
        self._loop.run_until_complete(self._loop.shutdown_asyncgens())
        self._loop.close()

    def start(self) -> "ServerThread":
        self._thread.start()
        if not self._started.wait(timeout=10):
            raise RuntimeError("broker server failed to start")
        return self

    @property
    def tcp_address(self) -> tuple[str, int]:
        assert self.server.tcp_address is not None
        return self.server.tcp_address

    @property
    def ws_address(self) -> tuple[str, int]:
        assert self.server.ws_address is not None
        return self.server.ws_address

    def stop(self) -> None:
        async def shutdown():
            await self.server.stop()
            self._loop.stop()

        if self._loop.is_running():
            asyncio.run_coroutine_threadsafe(shutdown(), self._loop)
            self._thread.join(timeout=10)
