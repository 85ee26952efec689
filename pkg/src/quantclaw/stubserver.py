"""Scriptable stub upstream backend for tests and demos.

Serves a chat-completion-style endpoint with a fixed reply and
programmable delay / usage counts. Runs in-process (threaded) for the
test suite or standalone via `python -m quantclaw.stubserver`.
"""

from __future__ import annotations

import argparse
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubUpstream:
    def __init__(
        self,
        name: str = "stub",
        reply: str = "ok",
        delay_s: float = 0.0,
        usage: tuple[int, int] | None = (100, 50),
        port: int = 0,
    ):
        self.name = name
        self.reply = reply
        self.delay_s = delay_s
        self.usage = usage
        self.requests_served = 0
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                if stub.delay_s:
                    time.sleep(stub.delay_s)
                self.send_response(200)
                self.end_headers()
                self.wfile.write(b'{"status":"ok"}')

            def do_POST(self):
                length = int(self.headers.get("content-length", 0))
                self.rfile.read(length)
                if stub.delay_s:
                    time.sleep(stub.delay_s)
                body = {
                    "id": f"{stub.name}-{stub.requests_served}",
                    "object": "chat.completion",
                    "model": stub.name,
                    "choices": [
                        {
                            "index": 0,
                            "message": {"role": "assistant", "content": stub.reply},
                            "finish_reason": "stop",
                        }
                    ],
                }
                if stub.usage is not None:
                    body["usage"] = {
                        "prompt_tokens": stub.usage[0],
                        "completion_tokens": stub.usage[1],
                    }
                stub.requests_served += 1
                payload = json.dumps(body).encode()
                self.send_response(200)
                self.send_header("content-type", "application/json")
                self.send_header("content-length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        self._server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def start(self) -> "StubUpstream":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    parser = argparse.ArgumentParser(description="Stub chat-completion upstream")
    parser.add_argument("--port", type=int, default=8001)
    parser.add_argument("--name", default="stub")
    parser.add_argument("--reply", default="ok")
    parser.add_argument("--delay", type=float, default=0.0)
    parser.add_argument("--prompt-tokens", type=int, default=100)
    parser.add_argument("--completion-tokens", type=int, default=50)
    parser.add_argument("--no-usage", action="store_true", help="omit the usage block")
    args = parser.parse_args(argv)
    usage = None if args.no_usage else (args.prompt_tokens, args.completion_tokens)
    stub = StubUpstream(
        name=args.name, reply=args.reply, delay_s=args.delay, usage=usage, port=args.port
    )
    print(f"stub upstream {args.name} listening on {stub.url}")
    stub.start()
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        stub.stop()


if __name__ == "__main__":
    main()
