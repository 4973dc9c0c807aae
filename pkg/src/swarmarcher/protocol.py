"""Wire protocol for the live game service.

One message per websocket text frame (frames are length-delimited by the
transport). Messages are JSON objects with a `kind` field; client to server:
aim, release, reset, set_policy; server to client: telemetry, scored, error.

Floats are serialized in scientific notation with 17 significant digits,
which round-trips IEEE double exactly, so a client comparing two numbers
that originated from the same server value sees exact equality.
"""

import json
import math

import numpy as np

CLIENT_KINDS = ("aim", "release", "reset", "set_policy")
SERVER_KINDS = ("telemetry", "scored", "error")


class ProtocolError(ValueError):
    """An inbound frame violates the message contract."""


def _encode_value(v, out: list):
    if v is None:
        out.append("null")
    elif isinstance(v, bool) or isinstance(v, np.bool_):
        out.append("true" if v else "false")
    elif isinstance(v, (int, np.integer)):
        out.append(str(int(v)))
    elif isinstance(v, (float, np.floating)):
        f = float(v)
        if not math.isfinite(f):
            raise ValueError(f"cannot serialize non-finite float {f}")
        out.append(format(f, ".17e"))
    elif isinstance(v, str):
        out.append(json.dumps(v))
    elif isinstance(v, np.ndarray):
        _encode_value(v.tolist(), out)
    elif isinstance(v, (list, tuple)):
        out.append("[")
        for i, item in enumerate(v):
            if i:
                out.append(",")
            _encode_value(item, out)
        out.append("]")
    elif isinstance(v, dict):
        out.append("{")
        for i, (k, item) in enumerate(v.items()):
            if i:
                out.append(",")
            if not isinstance(k, str):
                raise ValueError(f"object keys must be strings, got {k!r}")
            out.append(json.dumps(k))
            out.append(":")
            _encode_value(item, out)
        out.append("}")
    else:
        raise ValueError(f"cannot serialize {type(v).__name__}")


def encode_message(kind: str, payload: dict | None = None) -> str:
    """Serialize one outbound message; payload keys ride beside `kind`."""
    msg = {"kind": kind}
    if payload:
        msg.update(payload)
    out: list = []
    _encode_value(msg, out)
    return "".join(out)


def decode_message(text) -> dict:
    """Parse and shape-check one inbound frame."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"frame is not UTF-8: {exc}") from exc
    if not isinstance(text, str):
        raise ProtocolError(f"frame must be text, got {type(text).__name__}")
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"frame is not valid JSON: {exc}") from exc
    if not isinstance(msg, dict):
        raise ProtocolError("message must be a JSON object")
    kind = msg.get("kind")
    if not isinstance(kind, str):
        raise ProtocolError("message lacks a string `kind` field")
    return msg


def parse_vec3(msg: dict, key: str) -> np.ndarray:
    """Extract a finite [x, y, z] array field."""
    v = msg.get(key)
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ProtocolError(f"field {key!r} must be a 3-element array")
    try:
        arr = np.array([float(c) for c in v], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"field {key!r} has non-numeric components") from exc
    if not np.all(np.isfinite(arr)):
        raise ProtocolError(f"field {key!r} has non-finite components")
    return arr


def error_message(text: str, detail: str | None = None) -> str:
    payload: dict = {"message": text}
    if detail is not None:
        payload["detail"] = detail
    return encode_message("error", payload)
