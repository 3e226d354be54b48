"""Wire protocol shared by every generative seat.

One request shape, one response shape, six seats. Anything that speaks this
protocol over HTTP (or in process) can stand in for a real model, which is
what keeps the rest of the system testable on a desk machine. Images travel
as base64 PNG. The canonical JSON encoding (sorted keys, two-space indent)
is what the golden fixtures under docs/protocol/ are pinned to.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

SEATS = ("t2i", "i2i", "i2v", "flf2v", "llm", "vlm")

STATUS_OK = "ok"
STATUS_RETRYABLE = "retryable"
STATUS_FATAL = "fatal"
STATUSES = (STATUS_OK, STATUS_RETRYABLE, STATUS_FATAL)


class ProtocolError(ValueError):
    """Malformed request or response; never retried."""


@dataclass(frozen=True)
class BackendRequest:
    seat: str
    request_id: str
    seed: int
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BackendResponse:
    request_id: str
    status: str
    payload: dict = field(default_factory=dict)
    timing_ms: float = 0.0
    error: str = ""


# Required payload keys per seat, with the broad JSON type each must carry.
# Extra keys are allowed (the mock adds bookkeeping fields to clips).
REQUEST_FIELDS: dict[str, dict[str, type]] = {
    "t2i": {"prompt": str},
    "i2i": {"image": str, "references": list, "prompt": str},
    "i2v": {"image": str, "prompt": str, "frame_count": int, "fps": int},
    "flf2v": {
        "first": str,
        "last": str,
        "prompt": str,
        "transition": dict,
        "frame_count": int,
        "fps": int,
    },
    "llm": {"stage": str, "prompt": str},
    "vlm": {"frames": list, "question": str},
}

RESPONSE_FIELDS: dict[str, dict[str, type]] = {
    "t2i": {"image": str},
    "i2i": {"image": str},
    "i2v": {"frames": list},
    "flf2v": {"frames": list},
    "llm": {"text": str},
    "vlm": {"counts": list, "text": str},
}

TRANSITION_FIELDS = ("start", "end", "exiting", "entering", "movement", "description")


def _require(mapping: dict, fields: dict[str, type], where: str) -> None:
    for key, kind in fields.items():
        if key not in mapping:
            raise ProtocolError(f"{where}: missing field {key!r}")
        if kind is int:
            ok = isinstance(mapping[key], int) and not isinstance(mapping[key], bool)
        else:
            ok = isinstance(mapping[key], kind)
        if not ok:
            raise ProtocolError(
                f"{where}: field {key!r} must be {kind.__name__}, "
                f"got {type(mapping[key]).__name__}"
            )


def encode_request(request: BackendRequest) -> dict:
    validate_request(request)
    return {
        "seat": request.seat,
        "request_id": request.request_id,
        "seed": request.seed,
        "payload": request.payload,
    }


def validate_request(request: BackendRequest) -> None:
    if request.seat not in SEATS:
        raise ProtocolError(f"unknown seat {request.seat!r}, expected one of {SEATS}")
    if not request.request_id or not isinstance(request.request_id, str):
        raise ProtocolError("request_id must be a nonempty string")
    if not isinstance(request.seed, int) or isinstance(request.seed, bool):
        raise ProtocolError("seed must be an integer")
    if not isinstance(request.payload, dict):
        raise ProtocolError("payload must be an object")
    _require(request.payload, REQUEST_FIELDS[request.seat], f"{request.seat} request")
    if request.seat == "flf2v":
        tau = request.payload["transition"]
        for key in TRANSITION_FIELDS:
            if key not in tau:
                raise ProtocolError(f"flf2v request: transition missing {key!r}")


def parse_request(data: object) -> BackendRequest:
    if not isinstance(data, dict):
        raise ProtocolError("request must be a JSON object")
    _require(data, {"seat": str, "request_id": str, "seed": int, "payload": dict}, "request")
    request = BackendRequest(
        seat=data["seat"],
        request_id=data["request_id"],
        seed=data["seed"],
        payload=data["payload"],
    )
    validate_request(request)
    return request


def encode_response(response: BackendResponse, seat: str | None = None) -> dict:
    if seat is not None:
        validate_response(response, seat)
    data = {
        "request_id": response.request_id,
        "status": response.status,
        "payload": response.payload,
        "timing_ms": response.timing_ms,
    }
    if response.error:
        data["error"] = response.error
    return data


def validate_response(response: BackendResponse, seat: str) -> None:
    if response.status not in STATUSES:
        raise ProtocolError(
            f"unknown status {response.status!r}, expected one of {STATUSES}"
        )
    if response.status == STATUS_OK:
        _require(response.payload, RESPONSE_FIELDS[seat], f"{seat} response")


def parse_response(data: object, seat: str) -> BackendResponse:
    if not isinstance(data, dict):
        raise ProtocolError("response must be a JSON object")
    _require(data, {"request_id": str, "status": str, "payload": dict}, "response")
    response = BackendResponse(
        request_id=data["request_id"],
        status=data["status"],
        payload=data["payload"],
        timing_ms=float(data.get("timing_ms", 0.0)),
        error=str(data.get("error", "")),
    )
    validate_response(response, seat)
    return response


def canonical_json(data: object) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def encode_image(frame: np.ndarray) -> str:
    """uint8 HxWx3 array -> base64 PNG string."""
    if frame.dtype != np.uint8 or frame.ndim != 3 or frame.shape[2] != 3:
        raise ProtocolError(f"expected uint8 HxWx3 image, got {frame.dtype} {frame.shape}")
    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_image(text: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
        image = Image.open(io.BytesIO(raw))
        image.load()
    except Exception as exc:
        raise ProtocolError(f"not a base64 PNG image: {exc}") from exc
    return np.asarray(image.convert("RGB"), dtype=np.uint8)
