import json
import threading
import time
from pathlib import Path

import pytest
import uvicorn

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class ServerThread:
    """Run an ASGI app on a real socket for tests needing live streaming."""

    def __init__(self, app):
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> str:
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("uvicorn did not start in time")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=10)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def table1_points():
    data = json.loads((FIXTURES / "table1_points.json").read_text())
    return data["points"]


@pytest.fixture(scope="session")
def table4():
    return json.loads((FIXTURES / "table4_throughput.json").read_text())
