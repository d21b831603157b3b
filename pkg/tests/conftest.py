import threading
from functools import partial
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer

import pytest

from arxcast.core import ForecastRecord, TimeIndex, WeatherSample
from arxcast.synthetic import SyntheticConfig, generate

# criterion name -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE_RESULTS.items():
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        terminalreporter.write_line(f"[{status}] {name}: {detail}")


def rec(issued, lead, irr=100.0, temp=290.0, wind=3.0, offset=0):
    return ForecastRecord(TimeIndex(issued, offset), lead, WeatherSample(irr, temp, wind))


@pytest.fixture
def make_record():
    return rec


@pytest.fixture(scope="session")
def noiseless_config():
    return SyntheticConfig(days=30, noise_scale=0.0, seed=3)


@pytest.fixture(scope="session")
def noiseless_dataset(noiseless_config):
    return generate(noiseless_config)


@pytest.fixture(scope="session")
def small_dataset():
    return generate(SyntheticConfig(days=20, seed=11))


class _QuietHandler(SimpleHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_GET(self):
        self.server.hits.append(self.path)
        super().do_GET()


@pytest.fixture
def http_archive(tmp_path):
    """Serve ``tmp_path/remote`` over HTTP; yields (root, base_url, server)."""
    root = tmp_path / "remote"
    root.mkdir()
    server = ThreadingHTTPServer(("127.0.0.1", 0), partial(_QuietHandler, directory=str(root)))
    server.hits = []
    threading.Thread(target=server.serve_forever, daemon=True).start()
    yield root, f"http://127.0.0.1:{server.server_port}", server
    server.shutdown()
    server.server_close()
