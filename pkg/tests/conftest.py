import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from coop_arena.substrates import make_scenario
from coop_arena.tournament import Manifest, strategy_agent

ACCEPTANCE_LINES: list[str] = []

C5_ROSTER = ["ConditionalCooperator", "NaiveAltruist", "Defector", "RationalBaseline", "Random"]
SUBSTRATES = ["RealityShow", "PubCoordination", "Haggling", "LaborCollectiveAction", "StateFormation"]


def desk_scenarios(phase="evaluation", background="GrimTrigger"):
    """Resident and visitor scenario per substrate; two-seat games get four seats when resident."""
    specs = []
    for sub in SUBSTRATES:
        for mode in ("resident", "visitor"):
            n = 4 if mode == "resident" and sub in ("Haggling", "StateFormation") else None
            specs.append(make_scenario(f"{sub}_{mode}", sub, mode, background, population_size=n, phase=phase))
    return tuple(specs)


def desk_manifest(extra_agents=(), runs=10, seed=20240601):
    roster = tuple(strategy_agent(s) for s in C5_ROSTER) + tuple(extra_agents)
    return Manifest(desk_scenarios(), roster, runs, seed)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class MockChat:
    """In-process chat-completions endpoint driven by a reply script."""

    def __init__(self):
        self.replies = []  # items: str content, int status, ("sleep", seconds, content), ("raw", body)
        self.default = 500
        self.requests = []
        self.lock = threading.Lock()
        mock = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with mock.lock:
                    mock.requests.append({"path": self.path, "body": body, "auth": self.headers.get("Authorization")})
                    reply = mock.replies.pop(0) if mock.replies else mock.default
                if isinstance(reply, tuple) and reply[0] == "sleep":
                    time.sleep(reply[1])
                    reply = reply[2]
                if isinstance(reply, tuple) and reply[0] == "raw":
                    self._send(200, reply[1].encode())
                elif isinstance(reply, int):
                    self._send(reply, b'{"error": "mock failure"}')
                else:
                    payload = {"choices": [{"message": {"role": "assistant", "content": reply}}],
                               "usage": {"prompt_tokens": 11, "completion_tokens": 2}}
                    self._send(200, json.dumps(payload).encode())

            def _send(self, status, data):
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                try:
                    self.wfile.write(data)
                except (BrokenPipeError, ConnectionResetError):
                    pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.server.daemon_threads = True
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def mock_chat():
    server = MockChat()
    yield server
    server.close()
