"""Line-oriented frame codec.

One frame per line: a JSON object with fields v, session_id, seq, ts_ms,
from, kind, body, encoded as UTF-8 and terminated by a single '\\n'.
Encoding is canonical (fixed top-level field order, body keys sorted,
no insignificant whitespace) so that encode(decode(line)) == line and
logs diff cleanly across implementations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

from .protocol import FriendscopeError

__all__ = ["Role", "Frame", "CodecError", "VersionError", "encode_frame", "decode_frame", "WIRE_VERSION"]

WIRE_VERSION = 1

_FIELDS = ("v", "session_id", "seq", "ts_ms", "from", "kind", "body")


class CodecError(FriendscopeError):
    """Malformed frame line. `position` is a byte offset when known."""

    def __init__(self, reason: str, position: Optional[int] = None):
        self.reason = reason
        self.position = position
        suffix = f" at byte {position}" if position is not None else ""
        super().__init__(f"{reason}{suffix}")


class VersionError(CodecError):
    """Frame declares a wire version this codec does not speak."""


class Role(str, Enum):
    WEARER = "wearer"
    FRIEND = "friend"
    RELAY = "relay"


@dataclass(frozen=True)
class Frame:
    session_id: str
    seq: int
    ts_ms: int
    sender: Role
    kind: str
    body: dict
    v: int = WIRE_VERSION


def _canon(value: Any) -> Any:
    """Sort mapping keys recursively so encoding is order-independent."""
    if isinstance(value, dict):
        return {k: _canon(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_canon(v) for v in value]
    return value


def encode_frame(frame: Frame) -> bytes:
    obj = {
        "v": frame.v,
        "session_id": frame.session_id,
        "seq": frame.seq,
        "ts_ms": frame.ts_ms,
        "from": frame.sender.value,
        "kind": frame.kind,
        "body": _canon(frame.body),
    }
    line = json.dumps(obj, ensure_ascii=False, separators=(",", ":"))
    if "\n" in line or "\r" in line:  # cannot happen: json escapes control chars
        raise CodecError("frame would span lines")
    return line.encode("utf-8") + b"\n"


def decode_frame(line: bytes) -> Frame:
    text = line.decode("utf-8", errors="strict") if isinstance(line, bytes) else line
    text = text.rstrip("\n")
    if not text:
        raise CodecError("empty frame line", position=0)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CodecError(f"bad frame syntax: {exc.msg}", position=exc.pos) from exc
    if not isinstance(obj, dict):
        raise CodecError("frame is not an object", position=0)
    missing = [f for f in _FIELDS if f not in obj]
    if missing:
        raise CodecError(f"missing field(s): {', '.join(missing)}")
    extra = [k for k in obj if k not in _FIELDS]
    if extra:
        raise CodecError(f"unknown field(s): {', '.join(sorted(extra))}")
    if not isinstance(obj["v"], int) or isinstance(obj["v"], bool):
        raise CodecError("v must be an integer")
    if obj["v"] != WIRE_VERSION:
        raise VersionError(f"unsupported wire version {obj['v']}")
    if not isinstance(obj["session_id"], str):
        raise CodecError("session_id must be a string")
    for name in ("seq", "ts_ms"):
        if not isinstance(obj[name], int) or isinstance(obj[name], bool):
            raise CodecError(f"{name} must be an integer")
    try:
        sender = Role(obj["from"])
    except ValueError:
        raise CodecError(f"unknown sender {obj['from']!r}") from None
    if not isinstance(obj["kind"], str) or not obj["kind"]:
        raise CodecError("kind must be a non-empty string")
    if not isinstance(obj["body"], dict):
        raise CodecError("body must be an object")
    return Frame(
        session_id=obj["session_id"],
        seq=obj["seq"],
        ts_ms=obj["ts_ms"],
        sender=sender,
        kind=obj["kind"],
        body=obj["body"],
    )
