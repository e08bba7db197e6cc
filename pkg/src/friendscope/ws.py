"""Minimal HTTP/WebSocket front end for the relay's listening port.

The relay speaks newline-framed JSON over plain TCP. Browsers cannot
open raw TCP sockets, so the same port also answers HTTP: static files
for the web console, and a WebSocket endpoint at /ws that bridges one
frame per message to the exact same dispatch path TCP connections use.

Only the slice of RFC 6455 a browser client needs is implemented:
unfragmented text/binary messages, client-to-server masking, ping/pong,
and clean closes. Fragmented messages are rejected.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
from pathlib import Path
from typing import Optional

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}

OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WsError(Exception):
    pass


async def read_headers(reader: asyncio.StreamReader) -> dict:
    """Read header lines up to the blank line; keys lowercased."""
    headers: dict[str, str] = {}
    while True:
        line = await reader.readline()
        if line in (b"\r\n", b"\n", b""):
            return headers
        if len(headers) > 100 or len(line) > 8192:
            raise WsError("oversized request headers")
        name, _, value = line.decode("latin-1").partition(":")
        headers[name.strip().lower()] = value.strip()


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def handshake_response(client_key: str) -> bytes:
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(client_key)}\r\n"
        "\r\n"
    ).encode("ascii")


def encode_message(payload: bytes, opcode: int = OP_TEXT) -> bytes:
    """One unmasked, unfragmented server-to-client frame."""
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + n.to_bytes(2, "big")
    else:
        head += bytes([127]) + n.to_bytes(8, "big")
    return head + payload


async def read_message(reader: asyncio.StreamReader) -> tuple[int, bytes]:
    """One client frame as (opcode, unmasked payload)."""
    head = await reader.readexactly(2)
    fin = head[0] & 0x80
    opcode = head[0] & 0x0F
    if not fin or opcode == 0:
        raise WsError("fragmented messages are not supported")
    masked = head[1] & 0x80
    n = head[1] & 0x7F
    if n == 126:
        n = int.from_bytes(await reader.readexactly(2), "big")
    elif n == 127:
        n = int.from_bytes(await reader.readexactly(8), "big")
    if n > 1 << 22:
        raise WsError("message too large")
    if not masked:
        raise WsError("client frames must be masked")
    mask = await reader.readexactly(4)
    payload = bytearray(await reader.readexactly(n))
    for i in range(n):
        payload[i] ^= mask[i & 3]
    return opcode, bytes(payload)


class WsWriter:
    """Adapter giving a WebSocket the relay's StreamWriter surface."""

    def __init__(self, writer: asyncio.StreamWriter):
        self._writer = writer

    def write(self, data: bytes) -> None:
        self._writer.write(encode_message(data.rstrip(b"\n"), OP_TEXT))

    def is_closing(self) -> bool:
        return self._writer.is_closing()

    def close(self) -> None:
        if not self._writer.is_closing():
            self._writer.write(encode_message(b"", OP_CLOSE))
            self._writer.close()

    async def drain(self) -> None:
        await self._writer.drain()


def http_response(
    status: str, body: bytes, content_type: str = "text/plain; charset=utf-8"
) -> bytes:
    return (
        f"HTTP/1.1 {status}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Connection: close\r\n"
        "\r\n"
    ).encode("ascii") + body


def serve_static(console_dir: Optional[Path], path: str) -> bytes:
    if console_dir is None:
        return http_response("404 Not Found", b"no console bundled\n")
    rel = path.split("?", 1)[0].lstrip("/") or "index.html"
    target = (console_dir / rel).resolve()
    try:
        target.relative_to(console_dir.resolve())
    except ValueError:
        return http_response("404 Not Found", b"not found\n")
    if target.is_dir():
        target = target / "index.html"
    if not target.is_file():
        return http_response("404 Not Found", b"not found\n")
    ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
    return http_response("200 OK", target.read_bytes(), ctype)
