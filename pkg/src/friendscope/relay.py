"""Relay: schedules media transmission and runs the live TCP service.

The relay owns everything between the wearer agent and the friend's
phone: it turns SendMedia effects into a Transmitting notice, a short
countdown, and the media delivery; it appends every routed frame to a
per-session log; and in live mode it hosts the authoritative wearer
state machine, driven by newline-framed frames over TCP.

Session logs are ephemeral-by-construction: media frames carry a digest
and a byte size, never payload bytes, so a log can reproduce the
friend's transcript exactly without retaining a single captured pixel.
"""

from __future__ import annotations

import asyncio
import logging
import secrets
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from . import friend as friend_agent
from . import wearer as wearer_agent
from . import ws
from .codec import CodecError, Frame, Role, decode_frame, encode_frame
from .protocol import (
    Gesture,
    MediaItem,
    MediaKind,
    Notice,
    ProtocolParams,
    SessionError,
    SharingMode,
    parse_friend_text,
    render_notice,
)

log = logging.getLogger("friendscope.relay")

LOG_SUFFIX = ".fslog"

# The only fields a media frame ever carries. No payload, ever.
MEDIA_BODY_FIELDS = frozenset({"media_id", "media_kind", "digest", "size_bytes"})


# ---------------------------------------------------------------------------
# transmission schedule

@dataclass(frozen=True)
class TransmitPlan:
    """When one media item's relay frames go out.

    countdown holds (at_ms, n) pairs in emission order, n counting down
    to 1; the last tick lands one interval before delivery.
    """

    transmitting_at_ms: int
    countdown: tuple[tuple[int, int], ...]
    deliver_at_ms: int


def transmit_plan(kind: MediaKind, enqueued_at_ms: int, params: ProtocolParams) -> TransmitPlan:
    """Schedule for media entering the relay at enqueued_at_ms.

    The Transmitting notice goes out immediately; delivery happens one
    full transmission time later. Countdown ticks are anchored to the
    delivery instant and clamped so they never start before enqueue.
    """
    tx = params.tx_ms(kind)
    deliver_at = enqueued_at_ms + tx
    ticks = min(params.countdown_start, tx // params.countdown_interval_ms)
    countdown = tuple(
        (deliver_at - n * params.countdown_interval_ms, n)
        for n in range(ticks, 0, -1)
    )
    return TransmitPlan(enqueued_at_ms, countdown, deliver_at)


# ---------------------------------------------------------------------------
# frame vocabulary

def cmd_frame(session_id: str, seq: int, ts_ms: int, text: str) -> Frame:
    return Frame(session_id, seq, ts_ms, Role.FRIEND, "cmd", {"text": text})


def notice_frame(session_id: str, seq: int, ts_ms: int, sender: Role, notice: Notice) -> Frame:
    body: dict = {"notice": notice.kind.value, "text": render_notice(notice)}
    if notice.media_kind is not None:
        body["media_kind"] = notice.media_kind.value
    if notice.count is not None:
        body["count"] = notice.count
    if notice.mode is not None:
        body["mode"] = notice.mode.value
    return Frame(session_id, seq, ts_ms, sender, "notice", body)


def media_frame(session_id: str, seq: int, ts_ms: int, media: MediaItem) -> Frame:
    return Frame(
        session_id,
        seq,
        ts_ms,
        Role.RELAY,
        "media",
        {
            "media_id": media.id,
            "media_kind": media.kind.value,
            "digest": media.payload_digest,
            "size_bytes": media.size_bytes,
        },
    )


def led_frame(session_id: str, seq: int, ts_ms: int, signal) -> Frame:
    return Frame(
        session_id,
        seq,
        ts_ms,
        Role.RELAY,
        "led",
        {
            "color": signal.color.value,
            "pattern": signal.pattern.value,
            "cause": signal.cause.value,
            "start_ms": signal.start_ms,
            "end_ms": signal.end_ms,
        },
    )


def led_clear_frame(session_id: str, seq: int, ts_ms: int) -> Frame:
    return Frame(session_id, seq, ts_ms, Role.RELAY, "led_clear", {})


# ---------------------------------------------------------------------------
# log replay

def read_log(path: Union[str, Path]) -> list[Frame]:
    frames = []
    with open(path, "rb") as fh:
        for line in fh:
            frames.append(decode_frame(line))
    return frames


def replay_log(path: Union[str, Path]) -> friend_agent.FriendState:
    """Rebuild the friend's transcript from a session log.

    Sent entries come from the logged cmd frames, received entries from
    notice and media frames; both sides use the frame's own ts_ms, which
    is also what live endpoints stamp, so the digests match.
    """
    state = friend_agent.new_state()
    for frame in read_log(path):
        if state.session_id is None:
            state.session_id = frame.session_id
        if frame.sender is Role.FRIEND and frame.kind == "cmd":
            friend_agent.send_text(state, frame.body["text"], frame.ts_ms)
        else:
            friend_agent.ingest(state, frame, frame.ts_ms)
    return state


# ---------------------------------------------------------------------------
# live service

class _LiveSession:
    """One running session: agent state, endpoints, log, timers."""

    def __init__(
        self,
        session_id: str,
        token: str,
        friend_id: str,
        mode: SharingMode,
        params: ProtocolParams,
        log_path: Path,
        epoch: float,
    ):
        self.session_id = session_id
        self.token = token
        self.friend_id = friend_id
        self.mode = mode
        self.state = wearer_agent.new_state(params)
        self.log_path = log_path
        self.log_file = open(log_path, "ab")
        self.epoch = epoch
        self.writers: dict[Role, object] = {Role.WEARER: None, Role.FRIEND: None}
        self.started = False
        self.ended = False
        self.emit_seq = 0
        self.handles: list[asyncio.TimerHandle] = []

    def next_seq(self) -> int:
        self.emit_seq += 1
        return self.emit_seq


@dataclass(eq=False)
class _Conn:
    reader: asyncio.StreamReader
    writer: object  # StreamWriter or ws.WsWriter; both expose write/is_closing
    session: Optional[_LiveSession] = None
    role: Optional[Role] = None


class RelayServer:
    """Relay service hosting wearer agents, one connection per endpoint.

    The single listening port answers both protocols: raw TCP speaks
    newline-framed JSON directly, while connections opening with an HTTP
    request get static console files or, on /ws, a WebSocket carrying
    one frame per message into the same dispatch path.

    A connection first creates or attaches to a session, after which its
    frames drive that session's agent. The friend's first attach starts
    the session (sends the invitation).
    """

    def __init__(
        self,
        host: str,
        port: int,
        log_dir: Union[str, Path],
        console_dir: Optional[Union[str, Path]] = None,
    ):
        self.host = host
        self.port = port
        self.log_dir = Path(log_dir)
        self.console_dir = Path(console_dir) if console_dir is not None else None
        self.sessions: dict[str, _LiveSession] = {}
        self._server: Optional[asyncio.AbstractServer] = None
        self._conns: set[_Conn] = set()

    @property
    def bound_port(self) -> int:
        assert self._server is not None and self._server.sockets
        return self._server.sockets[0].getsockname()[1]

    async def start(self) -> None:
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self._server = await asyncio.start_server(self._handle_conn, self.host, self.port)

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        for conn in list(self._conns):
            conn.writer.close()
        for sess in self.sessions.values():
            for handle in sess.handles:
                handle.cancel()
            if not sess.log_file.closed:
                sess.log_file.close()

    # -- clock ------------------------------------------------------------

    def _now_ms(self, sess: _LiveSession) -> int:
        return int((asyncio.get_running_loop().time() - sess.epoch) * 1000)

    # -- frame IO ---------------------------------------------------------

    def _send(self, writer, frame: Frame) -> None:
        # writer is a StreamWriter or ws.WsWriter; None when detached
        if writer is None or writer.is_closing():
            return
        writer.write(encode_frame(frame))

    def _log_frame(self, sess: _LiveSession, frame: Frame) -> None:
        if sess.log_file.closed:
            return
        sess.log_file.write(encode_frame(frame))
        sess.log_file.flush()

    def _route(self, sess: _LiveSession, frame: Frame, to: Role) -> None:
        """Log the frame, then deliver it if that endpoint is connected."""
        self._log_frame(sess, frame)
        self._send(sess.writers.get(to), frame)

    def _error(self, conn: _Conn, code: str, message: str, session_id: str = "") -> None:
        frame = Frame(session_id, 0, 0, Role.RELAY, "error", {"code": code, "message": message})
        self._send(conn.writer, frame)

    # -- effect execution ---------------------------------------------------

    def _execute(self, sess: _LiveSession, effects: list, now: int) -> None:
        for eff in effects:
            if isinstance(eff, wearer_agent.SendNotice):
                frame = notice_frame(sess.session_id, sess.next_seq(), now, Role.WEARER, eff.notice)
                self._route(sess, frame, Role.FRIEND)
            elif isinstance(eff, wearer_agent.SendMedia):
                self._start_transmit(sess, eff.media, now)
            elif isinstance(eff, wearer_agent.SetLed):
                frame = led_frame(sess.session_id, sess.next_seq(), now, eff.signal)
                self._route(sess, frame, Role.WEARER)
            elif isinstance(eff, wearer_agent.ClearLed):
                frame = led_clear_frame(sess.session_id, sess.next_seq(), now)
                self._route(sess, frame, Role.WEARER)
            elif isinstance(eff, wearer_agent.ArmTimer):
                self._schedule(sess, eff, now)
            elif isinstance(eff, wearer_agent.Log):
                log.debug("session %s: %s", sess.session_id, eff.entry)

    def _schedule(self, sess: _LiveSession, eff: wearer_agent.ArmTimer, now: int) -> None:
        loop = asyncio.get_running_loop()
        delay = max(0, eff.fire_at_ms - now) / 1000.0
        handle = loop.call_later(
            delay, self._fire_timer, sess, eff.kind, eff.key, eff.fire_at_ms
        )
        sess.handles.append(handle)

    def _fire_timer(self, sess: _LiveSession, kind, key: str, fire_at: int) -> None:
        if sess.ended:
            return
        if not wearer_agent.timer_is_armed(sess.state, kind, key, fire_at):
            return  # disarmed since scheduling; stale
        effects = wearer_agent.on_timer(sess.state, kind, key, fire_at)
        self._execute(sess, effects, fire_at)

    def _start_transmit(self, sess: _LiveSession, media: MediaItem, now: int) -> None:
        plan = transmit_plan(media.kind, now, sess.state.params)
        frame = notice_frame(
            sess.session_id, sess.next_seq(), now, Role.RELAY, Notice.transmitting()
        )
        self._route(sess, frame, Role.FRIEND)
        loop = asyncio.get_running_loop()

        def emit_countdown(at: int, n: int) -> None:
            if sess.ended:
                return
            tick = notice_frame(
                sess.session_id, sess.next_seq(), at, Role.RELAY, Notice.countdown(n)
            )
            self._route(sess, tick, Role.FRIEND)

        def emit_media(at: int) -> None:
            if sess.ended:
                return
            self._route(sess, media_frame(sess.session_id, sess.next_seq(), at, media), Role.FRIEND)

        for at, n in plan.countdown:
            sess.handles.append(
                loop.call_later(max(0, at - now) / 1000.0, emit_countdown, at, n)
            )
        sess.handles.append(
            loop.call_later(
                max(0, plan.deliver_at_ms - now) / 1000.0, emit_media, plan.deliver_at_ms
            )
        )

    # -- connection protocol ----------------------------------------------

    async def _handle_conn(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        conn = _Conn(reader, writer)
        self._conns.add(conn)
        try:
            first = await reader.readline()
            if first:
                if first.split(b" ", 1)[0] in (b"GET", b"HEAD", b"POST", b"OPTIONS"):
                    await self._handle_http(conn, first, reader, writer)
                else:
                    await self._frame_loop(conn, reader, writer, first)
        except (ConnectionError, asyncio.IncompleteReadError, ws.WsError):
            pass
        finally:
            self._detach(conn)
            self._conns.discard(conn)
            writer.close()

    async def _frame_loop(
        self,
        conn: _Conn,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
        first_line: bytes,
    ) -> None:
        line = first_line
        while True:
            if line.strip():
                self._handle_line(conn, line)
                try:
                    await writer.drain()
                except ConnectionError:
                    return
            line = await reader.readline()
            if not line:
                return

    def _handle_line(self, conn: _Conn, line: bytes) -> None:
        try:
            frame = decode_frame(line)
        except CodecError as exc:
            self._error(conn, "BadFrame", str(exc))
            return
        self._dispatch(conn, frame)

    async def _handle_http(
        self,
        conn: _Conn,
        request_line: bytes,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ) -> None:
        parts = request_line.decode("latin-1").split()
        method = parts[0] if parts else ""
        path = parts[1] if len(parts) > 1 else "/"
        headers = await ws.read_headers(reader)
        if path == "/ws" or path.startswith("/ws?"):
            key = headers.get("sec-websocket-key")
            if (
                method == "GET"
                and key
                and "websocket" in headers.get("upgrade", "").lower()
            ):
                writer.write(ws.handshake_response(key))
                await writer.drain()
                conn.writer = ws.WsWriter(writer)
                await self._ws_loop(conn, reader, writer)
                return
            writer.write(ws.http_response("400 Bad Request", b"websocket upgrade required\n"))
            await writer.drain()
            return
        if method not in ("GET", "HEAD"):
            writer.write(ws.http_response("405 Method Not Allowed", b"method not allowed\n"))
            await writer.drain()
            return
        writer.write(ws.serve_static(self.console_dir, path))
        await writer.drain()

    async def _ws_loop(
        self, conn: _Conn, reader: asyncio.StreamReader, raw_writer: asyncio.StreamWriter
    ) -> None:
        while True:
            opcode, payload = await ws.read_message(reader)
            if opcode == ws.OP_CLOSE:
                raw_writer.write(ws.encode_message(payload[:2], ws.OP_CLOSE))
                await raw_writer.drain()
                return
            if opcode == ws.OP_PING:
                raw_writer.write(ws.encode_message(payload, ws.OP_PONG))
                await raw_writer.drain()
                continue
            if opcode == ws.OP_PONG:
                continue
            for piece in payload.splitlines():
                if piece.strip():
                    self._handle_line(conn, piece)
            try:
                await raw_writer.drain()
            except ConnectionError:
                return

    def _detach(self, conn: _Conn) -> None:
        if conn.session is not None and conn.role is not None:
            if conn.session.writers.get(conn.role) is conn.writer:
                conn.session.writers[conn.role] = None

    def _dispatch(self, conn: _Conn, frame: Frame) -> None:
        if conn.session is None:
            if frame.kind == "create_session":
                self._handle_create(conn, frame)
            elif frame.kind == "attach":
                self._handle_attach(conn, frame)
            else:
                self._error(conn, "NotAttached", "create_session or attach first")
            return
        sess = conn.session
        if sess.ended:
            self._error(conn, "NoSession", "session already ended", sess.session_id)
            return
        now = self._now_ms(sess)
        try:
            if conn.role is Role.WEARER:
                self._wearer_frame(sess, frame, now)
            else:
                self._friend_frame(sess, frame, now)
        except SessionError as exc:
            self._error(conn, "NoSession", str(exc), sess.session_id)
        except (KeyError, ValueError) as exc:
            self._error(conn, "BadRequest", f"bad {frame.kind} frame: {exc}", sess.session_id)

    def _handle_create(self, conn: _Conn, frame: Frame) -> None:
        body = frame.body
        session_id = body.get("session_id") or f"s{secrets.token_hex(4)}"
        if not isinstance(session_id, str):
            self._error(conn, "BadRequest", "session_id must be a string")
            return
        if session_id in self.sessions or (self.log_dir / (session_id + LOG_SUFFIX)).exists():
            self._error(conn, "IdCollision", f"session {session_id!r} already exists")
            return
        friend_id = body.get("friend_id", "friend")
        if not isinstance(friend_id, str) or not friend_id:
            self._error(conn, "BadRequest", "friend_id must be a non-empty string")
            return
        try:
            mode = SharingMode(body.get("mode", "manual"))
        except ValueError:
            self._error(conn, "BadRequest", f"unknown mode {body.get('mode')!r}")
            return
        overrides = body.get("params", {})
        if not isinstance(overrides, dict):
            self._error(conn, "BadRequest", "params must be an object")
            return
        try:
            params = ProtocolParams().with_overrides(overrides)
        except (TypeError, ValueError) as exc:
            self._error(conn, "BadRequest", f"bad params: {exc}")
            return
        token = secrets.token_hex(16)
        sess = _LiveSession(
            session_id=session_id,
            token=token,
            friend_id=friend_id,
            mode=mode,
            params=params,
            log_path=self.log_dir / (session_id + LOG_SUFFIX),
            epoch=asyncio.get_running_loop().time(),
        )
        self.sessions[session_id] = sess
        reply = Frame(
            session_id, 0, 0, Role.RELAY, "session_created",
            {"session_id": session_id, "token": token},
        )
        self._send(conn.writer, reply)

    def _handle_attach(self, conn: _Conn, frame: Frame) -> None:
        sess = self.sessions.get(frame.session_id)
        if sess is None or sess.ended:
            self._error(conn, "NoSuchSession", f"no session {frame.session_id!r}", frame.session_id)
            return
        if frame.sender not in (Role.WEARER, Role.FRIEND):
            self._error(conn, "BadRequest", "attach as wearer or friend", frame.session_id)
            return
        if frame.body.get("token") != sess.token:
            self._error(conn, "BadToken", "token mismatch", frame.session_id)
            return
        if sess.writers[frame.sender] is not None:
            self._error(conn, "SlotTaken", f"{frame.sender.value} already attached", frame.session_id)
            return
        sess.writers[frame.sender] = conn.writer
        conn.session = sess
        conn.role = frame.sender
        now = self._now_ms(sess)
        ack = Frame(
            sess.session_id, 0, now, Role.RELAY, "attached",
            {"role": frame.sender.value, "now_ms": now},
        )
        self._send(conn.writer, ack)
        if frame.sender is Role.FRIEND and not sess.started:
            sess.started = True
            effects = wearer_agent.start_session(sess.state, sess.friend_id, sess.mode, now)
            self._execute(sess, effects, now)

    def _wearer_frame(self, sess: _LiveSession, frame: Frame, now: int) -> None:
        if frame.kind == "gesture":
            gesture = Gesture(frame.body["gesture"])
            effects = wearer_agent.on_gesture(sess.state, gesture, now)
        elif frame.kind == "set_mode":
            mode = SharingMode(frame.body["mode"])
            sess.mode = mode
            effects = wearer_agent.set_mode(sess.state, mode, now)
        elif frame.kind == "end":
            effects = wearer_agent.end_session(sess.state, now)
            self._execute(sess, effects, now)
            self._end_session(sess)
            return
        else:
            raise SessionError(f"unknown wearer frame kind {frame.kind!r}")
        self._execute(sess, effects, now)

    def _friend_frame(self, sess: _LiveSession, frame: Frame, now: int) -> None:
        if frame.kind != "cmd":
            raise SessionError(f"unknown friend frame kind {frame.kind!r}")
        text = frame.body.get("text")
        if not isinstance(text, str):
            raise SessionError("cmd frame without text")
        self._log_frame(sess, frame)
        cmd = parse_friend_text(text)
        if cmd is None:
            log.debug("session %s: plain text ignored: %r", sess.session_id, text)
            return
        if not sess.started:
            log.debug("session %s: command before start ignored", sess.session_id)
            return
        effects = wearer_agent.on_friend_command(sess.state, cmd, now, sent_at_ms=frame.ts_ms)
        self._execute(sess, effects, now)

    def _end_session(self, sess: _LiveSession) -> None:
        sess.ended = True
        for handle in sess.handles:
            handle.cancel()
        sess.handles.clear()
        sess.log_file.close()
