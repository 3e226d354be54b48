"""Dispatch a request to a backend seat, in process or over HTTP.

Both routes serialize through the wire encoding, so the in-process mock
exercises exactly the bytes a remote backend would see. Retryable responses
and transport failures back off exponentially; protocol violations never
retry.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Callable, Optional

import requests

from .protocol import (
    STATUS_FATAL,
    STATUS_OK,
    STATUS_RETRYABLE,
    BackendRequest,
    BackendResponse,
    ProtocolError,
    encode_request,
    encode_response,
    parse_request,
    parse_response,
)


class BackendError(RuntimeError):
    """kind: 'transport' (network), 'protocol' (malformed), 'fatal' (backend said stop)."""

    def __init__(self, kind: str, seat: str, detail: str, attempts: int = 1):
        self.kind = kind
        self.seat = seat
        self.detail = detail
        self.attempts = attempts
        super().__init__(f"[{kind}] {seat}: {detail} (attempts={attempts})")


@dataclass
class BackendHandle:
    """Either an in-process service or a base URL, never both."""

    seat: str
    service: Optional[object] = None
    base_url: Optional[str] = None

    def __post_init__(self):
        if (self.service is None) == (self.base_url is None):
            raise ValueError("handle needs exactly one of service or base_url")


def handle_for(seat: str, config, service: Optional[object] = None) -> BackendHandle:
    """Resolve a seat against the run config; mock mode uses the given service."""
    if config.backend == "mock":
        if service is None:
            raise ValueError("mock backend requested but no service supplied")
        return BackendHandle(seat=seat, service=service)
    url = config.endpoint_for(seat)
    if not url:
        raise BackendError("transport", seat, "no endpoint configured for seat")
    return BackendHandle(seat=seat, base_url=url.rstrip("/"))


def _dispatch_once(handle: BackendHandle, encoded: dict) -> dict:
    if handle.service is not None:
        # Round-trip through JSON so the in-process path stays wire-honest.
        request = parse_request(json.loads(json.dumps(encoded)))
        response = handle.service.handle(request)
        return json.loads(json.dumps(encode_response(response)))
    url = f"{handle.base_url}/v1/{handle.seat}"
    reply = requests.post(url, json=encoded, timeout=120)
    if reply.status_code != 200:
        raise requests.RequestException(f"HTTP {reply.status_code}: {reply.text[:200]}")
    return reply.json()


def call_backend(
    handle: BackendHandle,
    request: BackendRequest,
    retries: int = 3,
    backoff: float = 0.05,
    sleep: Callable[[float], None] = time.sleep,
) -> BackendResponse:
    """Send one request; returns the ok response or raises BackendError.

    ``retries`` counts total attempts. Retryable statuses and transport
    errors wait backoff * 2^(attempt-1) seconds between tries.
    """
    if request.seat != handle.seat:
        raise ProtocolError(
            f"request seat {request.seat!r} does not match handle seat {handle.seat!r}"
        )
    encoded = encode_request(request)  # validates shape before any attempt
    attempts = 0
    last_detail = ""
    while attempts < max(retries, 1):
        attempts += 1
        try:
            raw = _dispatch_once(handle, encoded)
        except (requests.RequestException, ConnectionError, OSError) as exc:
            last_detail = str(exc)
            if attempts < retries:
                sleep(backoff * (2 ** (attempts - 1)))
            continue
        try:
            response = parse_response(raw, seat=request.seat)
        except ProtocolError as exc:
            raise BackendError("protocol", request.seat, str(exc), attempts) from exc
        if response.request_id != request.request_id:
            raise BackendError(
                "protocol",
                request.seat,
                f"response id {response.request_id!r} does not echo "
                f"{request.request_id!r}",
                attempts,
            )
        if response.status == STATUS_OK:
            return response
        if response.status == STATUS_RETRYABLE:
            last_detail = response.error or "backend asked for a retry"
            if attempts < retries:
                sleep(backoff * (2 ** (attempts - 1)))
            continue
        if response.status == STATUS_FATAL:
            raise BackendError(
                "fatal", request.seat, response.error or "backend failed", attempts
            )
    raise BackendError(
        "transport",
        request.seat,
        last_detail or "no successful response",
        attempts,
    )
