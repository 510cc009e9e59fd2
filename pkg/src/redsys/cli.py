"""Operator entry points: broker, services, scripted clients, dump, replay."""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import sys

from .broker import Broker, CorruptLog, replay_log
from .client import ScriptError, dump_document, run_client
from .net import parse_address
from .server import BrokerServer
from .service import ServiceRunner
from .services import Autocomplete, Hider, Highlighter, Spotter, TermDictionary, Transclusion

SERVICE_KINDS = ("highlighter", "spotter", "hider", "transclusion", "autocomplete")


def _default_addr() -> str:
    return os.environ.get("REDSYS_ADDR", "127.0.0.1:7890")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redsys")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    broker = sub.add_parser("broker", help="run the synchronization broker")
    broker.add_argument("--listen", default=_default_addr(), help="TCP host:port")
    broker.add_argument("--ws", default=None, help="WebSocket host:port")
    broker.add_argument("--log", default=None, help="revision log directory")
    broker.add_argument("--history-limit", type=int, default=None)

    service = sub.add_parser("service", help="run one authoring service")
    service.add_argument("kind", choices=SERVICE_KINDS)
    service.add_argument("--connect", default=_default_addr())
    service.add_argument("--doc", required=True)
    service.add_argument("--dict", dest="dict_path", default=None)
    service.add_argument("--latency", type=int, default=0, help="milliseconds")
    service.add_argument(
        "--no-cancel",
        action="store_true",
        help="spotter: keep processing despite overlapping edits",
    )
    service.add_argument("--id", dest="client_id", default=None)

    client = sub.add_parser("client", help="run a scripted editor")
    client.add_argument("--connect", default=_default_addr())
    client.add_argument("--doc", required=True)
    client.add_argument("--script", required=True)
    client.add_argument("--user", default="client")

    dump = sub.add_parser("dump", help="print a document")
    dump.add_argument("--connect", default=_default_addr())
    dump.add_argument("--doc", required=True)
    dump.add_argument("--attrs", action="store_true")

    replay = sub.add_parser("replay", help="rebuild a document from its log")
    replay.add_argument("--log", required=True)
    replay.add_argument("--doc", required=True)
    return parser


def make_service(args) -> tuple[str, tuple[str, ...], object]:
    """(default client id, subscriptions, handler) for a service kind."""
    if args.kind == "highlighter":
        return "highlighter", (), Highlighter()
    if args.kind == "spotter":
        dictionary = (
            TermDictionary.load(args.dict_path) if args.dict_path else TermDictionary({})
        )
        handler = Spotter(
            dictionary,
            latency_ms=args.latency,
            cancel_on_conflict=not args.no_cancel,
        )
        return "spotter_plugin", ("contextmenu.spotter_plugin.",), handler
    if args.kind == "hider":
        return "hider", (), Hider()
    if args.kind == "transclusion":
        return "transclusion", (), Transclusion()
    if args.kind == "autocomplete":
        dictionary = TermDictionary.load(args.dict_path) if args.dict_path else None
        return "autocomplete", ("autocomplete.",), Autocomplete(dictionary)
    raise ValueError(args.kind)


def cmd_broker(args) -> int:
    host, port = parse_address(args.listen)
    ws_host = ws_port = None
    if args.ws:
        ws_host, ws_port = parse_address(args.ws)
    broker = Broker(log_dir=args.log, history_limit=args.history_limit)
    server = BrokerServer(broker, host, port, ws_host, ws_port)

    async def main():
        await server.start()
        print(f"redsys broker on tcp {server.tcp_address}"
              + (f" ws {server.ws_address}" if server.ws_address else ""))
        await server.serve_forever()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_service(args) -> int:
    client_id, subscriptions, handler = make_service(args)
    runner = ServiceRunner(
        args.connect,
        args.doc,
        args.client_id or client_id,
        subscriptions,
        handler,
    )
    try:
        runner.run()
    except KeyboardInterrupt:
        runner.stop()
    return 0


def cmd_client(args) -> int:
    with open(args.script, encoding="utf-8") as fh:
        script_text = fh.read()
    transcript: list[str] = []
    try:
        code = run_client(script_text, args.connect, args.doc, args.user, transcript)
    finally:
        for line in transcript:
            print(line)
    return code


def cmd_dump(args) -> int:
    try:
        sys.stdout.write(dump_document(args.connect, args.doc, args.attrs))
        sys.stdout.write("\n")
    except ScriptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    path = os.path.join(args.log, f"{args.doc}.log")
    if not os.path.exists(path):
        print(f"error: no log at {path}", file=sys.stderr)
        return 1
    try:
        doc = replay_log(path)
    except CorruptLog as exc:
        print(f"error: corrupt log: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(doc.text)
    sys.stdout.write("\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    handlers = {
        "broker": cmd_broker,
        "service": cmd_service,
        "client": cmd_client,
        "dump": cmd_dump,
        "replay": cmd_replay,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
