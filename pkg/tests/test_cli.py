"""Script parsing and the CLI surface (client, dump, replay)."""

from __future__ import annotations

import threading

import pytest

from redsys.broker import Broker
from redsys.cli import main
from redsys.client import ScriptError, parse_script, run_client
from redsys.server import ServerThread


@pytest.fixture()
def server():
    thread = ServerThread(Broker()).start()
    yield thread
    thread.stop()


def addr_str(address):
    return f"{address[0]}:{address[1]}"


class TestParseScript:
    def test_commands(self):
        script = """
        # a comment
        insert 0 "hello world"
        delete 3 2
        attr 0 4 bold "true"
        wait 100
        expectText "helo world"
        expectAttr 0 bold "true"
        event autocomplete.stex sync {"pos": "3"}
        """
        commands = parse_script(script)
        assert [c.name for c in commands] == [
            "insert",
            "delete",
            "attr",
            "wait",
            "expectText",
            "expectAttr",
            "event",
        ]
        assert commands[0].args == (0, "hello world")
        assert commands[6].args == ("autocomplete.stex", "sync", {"pos": "3"})

    def test_json_escapes(self):
        commands = parse_script('insert 0 "line1\\nline2"')
        assert commands[0].args == (0, "line1\nline2")

    def test_unknown_command(self):
        with pytest.raises(ScriptError, match="line 1"):
            parse_script("frobnicate 1 2")

    def test_bad_json(self):
        with pytest.raises(ScriptError):
            parse_script('insert 0 "unterminated')


class TestClientRun:
    def test_insert_and_expect(self, server):
        transcript: list[str] = []
        code = run_client(
            'insert 0 "ab"\nexpectText "ab"\n',
            server.tcp_address,
            "doc-a",
            "u1",
            transcript,
        )
        assert code == 0
        assert any(line.startswith("## insert") for line in transcript)
        assert any('"kind": "Ack"' in line for line in transcript)

    def test_failed_expectation_nonzero_exit(self, server):
        transcript: list[str] = []
        code = run_client(
            'insert 0 "ab"\nexpectText "zz"\n',
            server.tcp_address,
            "doc-b",
            "u1",
            transcript,
        )
        assert code == 1
        assert any(line.startswith("!!") for line in transcript)

    def test_transcript_deterministic(self, server):
        script = 'insert 0 "abc"\ndelete 1 1\nattr 0 2 bold "true"\nexpectText "ac"\n'
        one: list[str] = []
        two: list[str] = []
        assert run_client(script, server.tcp_address, "doc-c1", "u", one) == 0
        assert run_client(script, server.tcp_address, "doc-c2", "u", two) == 0
        assert [l.replace("doc-c1", "D") for l in one] == [
            l.replace("doc-c2", "D") for l in two
        ]


class TestCliCommands:
    def test_client_dump_replay(self, server, tmp_path, capsys):
        # run a broker with logging enabled on a separate port
        log_dir = tmp_path / "logs"
        logged = ServerThread(Broker(log_dir=str(log_dir))).start()
        try:
            script = tmp_path / "s.txt"
            script.write_text('insert 0 "Math is great"\nexpectText "Math is great"\n')
            code = main(
                [
                    "client",
                    "--connect",
                    addr_str(logged.tcp_address),
                    "--doc",
                    "d1",
                    "--script",
                    str(script),
                ]
            )
            assert code == 0
            capsys.readouterr()

            assert (
                main(["dump", "--connect", addr_str(logged.tcp_address), "--doc", "d1"])
                == 0
            )
            assert capsys.readouterr().out == "Math is great\n"

            assert main(["replay", "--log", str(log_dir), "--doc", "d1"]) == 0
            assert capsys.readouterr().out == "Math is great\n"
        finally:
            logged.stop()

    def test_dump_unknown_doc_error_exit(self, server, capsys):
        code = main(["dump", "--connect", addr_str(server.tcp_address), "--doc", "nope"])
        assert code == 1
        assert "UnknownDoc" in capsys.readouterr().err

    def test_replay_missing_log(self, tmp_path, capsys):
        code = main(["replay", "--log", str(tmp_path), "--doc", "ghost"])
        assert code == 1
