from __future__ import annotations

import json
import socket
import threading
import time
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from mlar.domain import DocumentId, DocumentKind, RawDocument
from mlar.extraction import Schema, document_text_from_prompt, rules_extract

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_doc(text: str, kind: DocumentKind = DocumentKind.RESUME, received_at: datetime = T0) -> RawDocument:
    return RawDocument(DocumentId.of_bytes(text.encode()), kind, f"/inbox/{kind.value.lower()}.txt", text, received_at)


class StubLLM:
    """Local HTTP server speaking the ``{"prompt"} -> {"text"}`` contract.

    ``respond(prompt, n)`` returns ``(status, text_or_body)``; ``n`` is the
    1-based request count. Default answers extraction prompts with the rules
    extractor's output for the embedded document.
    """

    def __init__(self):
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        self.delay = 0.0
        self.respond = self.default_respond
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                with stub._lock:
                    stub.requests.append(body)
                    stub.headers.append(dict(self.headers))
                    n = len(stub.requests)
                if stub.delay:
                    time.sleep(stub.delay)
                status, payload = stub.respond(body["prompt"], n)
                if isinstance(payload, str):
                    raw = json.dumps({"text": payload}).encode()
                else:
                    raw = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.server.daemon_threads = True
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1/generate"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @staticmethod
    def default_respond(prompt: str, n: int):
        text = document_text_from_prompt(prompt)
        schema = Schema.JOB if "job posting" in prompt.splitlines()[0] else Schema.RESUME
        kind = DocumentKind.JOB if schema is Schema.JOB else DocumentKind.RESUME
        record = rules_extract(make_doc(text, kind), schema)
        return 200, "```json\n" + json.dumps(record) + "\n```"

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_llm(monkeypatch):
    monkeypatch.setenv("MLAR_TEST_KEY", "sekret")
    stub = StubLLM()
    yield stub
    stub.close()


class StubSMTP:
    def __init__(self):
        from aiosmtpd.controller import Controller

        self.messages: list = []
        stub = self

        class Handler:
            async def handle_DATA(self, server, session, envelope):
                stub.messages.append(envelope)
                return "250 OK"

        self.host = "127.0.0.1"
        self.port = free_port()
        self.controller = Controller(Handler(), hostname=self.host, port=self.port)
        self.controller.start()

    def close(self):
        self.controller.stop()


@pytest.fixture
def stub_smtp():
    stub = StubSMTP()
    yield stub
    stub.close()


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture
def unused_port():
    return free_port()


def write_file(path: Path, text: str, mtime: float | None = None) -> Path:
    import os

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    if mtime is not None:
        os.utime(path, (mtime, mtime))
    return path


# ----------------------------------------------------------------------------
# Acceptance summary: one line per criterion at the end of the run.
# ----------------------------------------------------------------------------

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance[name] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    elif report.failed or (report.skipped and report.when == "setup"):
        _acceptance[name] = "FAIL" if report.failed else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{outcome:4}  {name}")
