"""Serve a mock backend service over HTTP on the stdlib server.

POST /v1/<seat> takes a wire request and answers a wire response; protocol
violations come back as HTTP 400 with an error body. GET /v1/health reports
the seats this process can answer for.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .. import __version__
from .protocol import (
    SEATS,
    ProtocolError,
    encode_response,
    parse_request,
)
from .service import MockBackendService


class _Handler(BaseHTTPRequestHandler):
    service: MockBackendService  # attached by _make_handler

    def log_message(self, fmt, *args):  # stay quiet under test
        pass

    def _send(self, code: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/v1/health":
            self._send(
                200,
                {
                    "status": "ok",
                    "service": "infstory-mock",
                    "version": __version__,
                    "seats": list(SEATS),
                },
            )
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self):
        parts = self.path.strip("/").split("/")
        if len(parts) != 2 or parts[0] != "v1" or parts[1] not in SEATS:
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        seat = parts[1]
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._send(400, {"error": f"body is not JSON: {exc}"})
            return
        try:
            request = parse_request(data)
            if request.seat != seat:
                raise ProtocolError(
                    f"request seat {request.seat!r} does not match path seat {seat!r}"
                )
        except ProtocolError as exc:
            self._send(400, {"error": str(exc)})
            return
        response = self.service.handle(request)
        self._send(200, encode_response(response))


def _make_handler(service: MockBackendService):
    return type("BoundHandler", (_Handler,), {"service": service})


class MockServer:
    """Threaded mock server; use as a context manager in tests."""

    def __init__(self, service: MockBackendService, host: str = "127.0.0.1", port: int = 0):
        try:
            self._httpd = ThreadingHTTPServer((host, port), _make_handler(service))
        except OSError as exc:
            raise RuntimeError(f"cannot bind {host}:{port}: {exc}") from exc
        self.host, self.port = self._httpd.server_address[:2]
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> "MockServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self) -> "MockServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()
