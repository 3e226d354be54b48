"""Backend seats behind a small HTTP wire protocol, plus deterministic mocks."""

from .client import BackendError, BackendHandle, call_backend, handle_for
from .protocol import (
    SEATS,
    BackendRequest,
    BackendResponse,
    ProtocolError,
    canonical_json,
    decode_image,
    encode_image,
)
from .service import MockBackendService, MockFaults
from .server import MockServer

__all__ = [
    "SEATS",
    "BackendRequest",
    "BackendResponse",
    "BackendError",
    "BackendHandle",
    "MockBackendService",
    "MockFaults",
    "MockServer",
    "ProtocolError",
    "call_backend",
    "canonical_json",
    "decode_image",
    "encode_image",
    "handle_for",
]
