import datetime as dt
import http.server
import threading
import urllib.parse

import pytest

from candlecnn import synthetic

FIXTURE_CSV = (
    b"Date,Open,High,Low,Close,Adj Close,Volume\n"
    b"2019-01-02,100,105,99,104,104,1000\n"
    b"2019-01-03,104,106,101,102,102,1500\n"
    b"2019-01-04,102,103,98,99,99,0\n"
)


@pytest.fixture
def fixture_csv():
    return FIXTURE_CSV


@pytest.fixture
def long_series():
    return synthetic.random_walk("GOLD", dt.date(2018, 1, 1), 200, drift=0.001, vol=0.02, seed=7)


class _Handler(http.server.BaseHTTPRequestHandler):
    routes = {}

    def do_GET(self):
        q = urllib.parse.parse_qs(urllib.parse.urlparse(self.path).query)
        symbol = q.get("symbol", [""])[0]
        self.server.requests.append(q)
        body = self.server.routes.get(symbol)
        if body is None:
            self.send_response(404)
            self.end_headers()
            return
        self.send_response(200)
        self.send_header("Content-Type", "text/csv")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def csv_server():
    """Local HTTP server; set ``server.routes[ticker] = csv_bytes``."""
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    server.routes = {}
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.url = f"http://127.0.0.1:{server.server_address[1]}/download"
    yield server
    server.shutdown()
    server.server_close()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
