"""Blocking line-framed TCP client used by services and headless clients."""

from __future__ import annotations

import queue
import socket
import threading

from .protocol import DecodeError, Message, decode, encode


def parse_address(addr: str) -> tuple[str, int]:
    """'host:port' -> (host, port); bare ':port' binds localhost."""
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


class PeerConnection:
    """One duplex connection: writes are locked, reads arrive on a queue."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._write_lock = threading.Lock()
        self.inbox: queue.Queue[Message | None] = queue.Queue()
        self.closed = False
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    @classmethod
    def open(cls, addr: str | tuple[str, int], timeout: float = 10.0) -> "PeerConnection":
        if isinstance(addr, str):
            addr = parse_address(addr)
        sock = socket.create_connection(addr, timeout=timeout)
        sock.settimeout(None)
        return cls(sock)

    def _pump(self) -> None:
        buf = b""
        try:
            while True:
                data = self._sock.recv(65536)
                if not data:
                    break
                buf += data
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    try:
                        self.inbox.put(decode(line))
                    except DecodeError:
                        continue  # skip garbage; peers are not trusted to be clean
        except OSError:
            pass
        finally:
            self.closed = True
            self.inbox.put(None)

    def send(self, msg: Message) -> None:
        data = encode(msg)
        with self._write_lock:
            self._sock.sendall(data)

    def recv(self, timeout: float | None = None) -> Message | None:
        """Next message, or None on timeout / connection end."""
        try:
            return self.inbox.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
