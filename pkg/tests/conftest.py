from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from coveragescope.tle import parse_tle_text

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def verification_records():
    records, report = parse_tle_text((FIXTURES / "verification.tle").read_text())
    assert report.ok
    return records


@pytest.fixture(scope="session")
def verification_lines():
    lines = (FIXTURES / "verification.tle").read_text().splitlines()
    return [(lines[i], lines[i + 1]) for i in range(0, len(lines), 2)]


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


class LiveCatalog:
    """The mock catalog served by uvicorn on an ephemeral local port, in a daemon thread."""

    def __init__(self, pages_dir):
        import socket
        import threading

        import uvicorn

        from coveragescope.stac.mockserver import create_mock_app

        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            self.port = s.getsockname()[1]
        config = uvicorn.Config(create_mock_app(pages_dir), host="127.0.0.1", port=self.port, log_level="error")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def endpoint(self):
        return f"http://127.0.0.1:{self.port}/search"

    def __enter__(self):
        import time
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("mock catalog did not start")
            time.sleep(0.02)
        return self

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
