from __future__ import annotations

import json
import shlex
import sys
from pathlib import Path

import pytest

from slicefix.encoder import encode_input
from slicefix.frontend import Statement, StatementKind
from slicefix.generators import (
    CommandBackend,
    GeneratorError,
    GeneratorSpec,
    check_candidates,
    generate,
    make_generator,
    parse_spec,
)
from slicefix.slicer import SliceContext

FIXTURES = Path(__file__).parent / "fixtures"


def _input_for(buggy: str):
    stmt = Statement(sid=1, line=1, text=buggy, kind=StatementKind.EXPRESSION, tokens=tuple(buggy.split()))
    return encode_input(SliceContext(buggy=stmt, intra=[], global_items=[]), budget=256)


def _backend_cmd(table: dict | None = None, mode: str = "ok") -> str:
    script = FIXTURES / "echo_backend.py"
    return " ".join(
        [shlex.quote(sys.executable), shlex.quote(str(script)), shlex.quote(json.dumps(table or {})), mode]
    )


class TestContract:
    def test_valid_sequence(self):
        raw = [{"rank": 1, "text": "a ;", "score": 0.9}, {"rank": 2, "text": "b ;", "score": 0.5}]
        cands = check_candidates(raw, 10, "gen")
        assert [c.rank for c in cands] == [1, 2]

    def test_rank_gap_rejected(self):
        raw = [{"rank": 1, "text": "a ;", "score": 0.9}, {"rank": 3, "text": "b ;", "score": 0.5}]
        with pytest.raises(GeneratorError):
            check_candidates(raw, 10, "gen")

    def test_increasing_score_rejected(self):
        raw = [{"rank": 1, "text": "a ;", "score": 0.1}, {"rank": 2, "text": "b ;", "score": 0.5}]
        with pytest.raises(GeneratorError):
            check_candidates(raw, 10, "gen")

    def test_too_many_candidates_rejected(self):
        raw = [{"rank": i, "text": "x ;", "score": 1.0 / i} for i in range(1, 12)]
        with pytest.raises(GeneratorError):
            check_candidates(raw, 10, "gen")


class TestBuiltins:
    def test_identity(self):
        spec = GeneratorSpec(kind="identity", name="identity")
        cands = generate(spec, _input_for("a = b ;"), k=3)
        assert len(cands) == 1
        assert cands[0].rank == 1 and cands[0].text == "a = b ;" and cands[0].score == 1.0

    def test_replay_table(self):
        spec = GeneratorSpec(
            kind="replay", name="replay", table={"bug42": ["x = y + 1 ;", "x = y ;"]}
        )
        cands = generate(spec, _input_for("x = 0 ;"), k=10, instance_id="bug42")
        assert [(c.rank, c.text) for c in cands] == [(1, "x = y + 1 ;"), (2, "x = y ;")]
        assert cands[0].score >= cands[1].score

    def test_replay_unknown_id_empty(self):
        spec = GeneratorSpec(kind="replay", name="replay", table={})
        assert generate(spec, _input_for("x ;"), k=10, instance_id="nope") == []

    def test_replay_caps_at_k(self):
        spec = GeneratorSpec(kind="replay", name="replay", table={"b": [f"v{i} ;" for i in range(9)]})
        assert len(generate(spec, _input_for("x ;"), k=4, instance_id="b")) == 4

    def test_mutate_flip(self):
        spec = GeneratorSpec(
            kind="mutate", name="mutate", rules=[{"op": "flip", "from": "==", "to": "!="}]
        )
        cands = generate(spec, _input_for("if ( a == b ) {"), k=10)
        assert cands[0].rank == 1
        assert cands[0].text == "if ( a != b ) {"

    def test_mutate_rules_applied_in_order(self):
        spec = GeneratorSpec(
            kind="mutate",
            name="mutate",
            rules=[
                {"op": "flip", "from": "+", "to": "-"},
                {"op": "delete", "token": "x"},
            ],
        )
        cands = generate(spec, _input_for("y = x + x ;"), k=10)
        assert [c.text for c in cands] == ["y = x - x ;", "y = + x ;", "y = x + ;"]

    def test_mutate_deterministic(self):
        spec = GeneratorSpec(kind="mutate", name="m", rules=[{"op": "flip", "from": "<", "to": "<="}])
        a = generate(spec, _input_for("while ( i < n ) {"), k=5)
        b = generate(spec, _input_for("while ( i < n ) {"), k=5)
        assert a == b

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            generate(GeneratorSpec(kind="identity", name="i"), _input_for("x ;"), k=0)


class TestParseSpec:
    def test_identity(self):
        assert parse_spec("identity").kind == "identity"

    def test_replay_file(self, tmp_path):
        table = tmp_path / "table.json"
        table.write_text(json.dumps({"b": ["fix ;"]}))
        spec = parse_spec(f"replay:{table}")
        assert spec.kind == "replay" and spec.table == {"b": ["fix ;"]}

    def test_cmd(self):
        spec = parse_spec("cmd:python3 backend.py")
        assert spec.kind == "external" and spec.command == "python3 backend.py"

    def test_http(self):
        spec = parse_spec("http:http://localhost:9999/v1")
        assert spec.kind == "external" and spec.url == "http://localhost:9999/v1"

    def test_bare_url_accepted(self):
        spec = parse_spec("http://localhost:9999/v1")
        assert spec.kind == "external" and spec.url == "http://localhost:9999/v1"
        spec = parse_spec("https://host/api")
        assert spec.url == "https://host/api"

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_spec("wat:huh")


class TestCommandBackend:
    def test_round_trip(self):
        spec = GeneratorSpec(
            kind="external",
            name="echo",
            command=_backend_cmd({"bug1": ["fixed ( ) ;", "other ( ) ;"]}),
        )
        gen = make_generator(spec)
        try:
            cands = gen.generate(_input_for("broken ( ) ;"), 10, "bug1")
            assert [c.text for c in cands] == ["fixed ( ) ;", "other ( ) ;"]
            again = gen.generate(_input_for("broken ( ) ;"), 10, "bug1")
            assert cands == again  # same connection, deterministic
        finally:
            gen.close()

    def test_echo_fallback_returns_buggy(self):
        gen = CommandBackend(_backend_cmd(), name="echo")
        try:
            cands = gen.generate(_input_for("a = b ;"), 5, "whatever")
            assert cands[0].text == "a = b ;"
        finally:
            gen.close()

    def test_timeout_raises_with_instance_id(self):
        gen = CommandBackend(_backend_cmd(mode="hang"), name="hang", timeout=0.5)
        try:
            with pytest.raises(GeneratorError) as err:
                gen.generate(_input_for("x ;"), 5, "bug-7")
            assert err.value.instance_id == "bug-7"
        finally:
            gen.close()

    def test_garbage_response_raises(self):
        gen = CommandBackend(_backend_cmd(mode="garbage"), name="bad", timeout=5)
        try:
            with pytest.raises(GeneratorError):
                gen.generate(_input_for("x ;"), 5, "b")
        finally:
            gen.close()

    def test_contract_violation_from_backend(self):
        gen = CommandBackend(_backend_cmd(mode="bad-ranks"), name="bad", timeout=5)
        try:
            with pytest.raises(GeneratorError):
                gen.generate(_input_for("x ;"), 5, "b")
        finally:
            gen.close()

    def test_dead_command_raises(self):
        gen = CommandBackend("false", name="dead", timeout=2)
        try:
            with pytest.raises(GeneratorError):
                gen.generate(_input_for("x ;"), 5, "b")
        finally:
            gen.close()


class TestHttpBackend:
    @pytest.fixture()
    def server(self):
        import threading
        from http.server import BaseHTTPRequestHandler, HTTPServer

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers["Content-Length"]))
                request = json.loads(body)
                if request["id"] == "explode":
                    payload = {"id": request["id"], "error": "backend exploded"}
                else:
                    payload = {
                        "id": request["id"],
                        "candidates": [
                            {"rank": 1, "text": "served ( ) ;", "score": 0.8},
                            {"rank": 2, "text": "alt ( ) ;", "score": 0.2},
                        ][: request["k"]],
                    }
                data = json.dumps(payload).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        httpd = HTTPServer(("127.0.0.1", 0), Handler)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        try:
            yield f"http://127.0.0.1:{httpd.server_port}/generate"
        finally:
            httpd.shutdown()

    def test_http_round_trip(self, server):
        spec = parse_spec(f"http:{server}")
        cands = generate(spec, _input_for("x ;"), k=10, instance_id="bug-9")
        assert [c.text for c in cands] == ["served ( ) ;", "alt ( ) ;"]

    def test_http_k_respected(self, server):
        spec = parse_spec(f"http:{server}")
        assert len(generate(spec, _input_for("x ;"), k=1, instance_id="b")) == 1

    def test_http_error_response(self, server):
        spec = parse_spec(f"http:{server}")
        with pytest.raises(GeneratorError) as err:
            generate(spec, _input_for("x ;"), k=5, instance_id="explode")
        assert "exploded" in str(err.value)

    def test_http_unreachable(self):
        spec = GeneratorSpec(kind="external", name="http", url="http://127.0.0.1:1/nope", timeout=1)
        with pytest.raises(GeneratorError):
            generate(spec, _input_for("x ;"), k=5, instance_id="b")
