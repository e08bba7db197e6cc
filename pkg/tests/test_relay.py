"""Live relay: sessions over real sockets, logs, replay, WebSocket."""

import asyncio

from friendscope import friend as friend_agent
from friendscope.codec import Frame, Role, decode_frame, encode_frame
from friendscope.protocol import INVITATION_TEXT, SESSION_ENDED_TEXT
from friendscope.relay import MEDIA_BODY_FIELDS, RelayServer, read_log, replay_log
from friendscope import ws

# quick enough that a whole session fits in well under a second
FAST_PARAMS = {
    "trigger_timeout_ms": 200,
    "video_len_ms": 150,
    "photo_capture_ms": 50,
    "video_tx_ms": 100,
    "photo_tx_ms": 50,
    "hold_ms": 150,
    "countdown_start": 2,
    "countdown_interval_ms": 50,
    "thumb_flash_ms": 50,
    "sent_flash_ms": 50,
}


class Endpoint:
    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    def send(self, frame: Frame) -> None:
        self.writer.write(encode_frame(frame))

    async def recv(self) -> Frame:
        line = await asyncio.wait_for(self.reader.readline(), timeout=5)
        assert line, "connection closed unexpectedly"
        return decode_frame(line)

    async def expect(self, kind: str) -> Frame:
        while True:
            frame = await self.recv()
            assert frame.kind != "error", frame.body
            if frame.kind == kind:
                return frame

    def close(self) -> None:
        self.writer.close()


async def connect(port) -> Endpoint:
    reader, writer = await asyncio.open_connection("127.0.0.1", port)
    return Endpoint(reader, writer)


async def start_relay(tmp_path, **kw) -> RelayServer:
    server = RelayServer("127.0.0.1", 0, tmp_path, **kw)
    await server.start()
    return server


async def create_and_attach(port, params=FAST_PARAMS, mode="manual"):
    wearer = await connect(port)
    wearer.send(Frame("", 0, 0, Role.WEARER, "create_session",
                      {"friend_id": "sam", "mode": mode, "params": params}))
    created = await wearer.expect("session_created")
    sid = created.body["session_id"]
    token = created.body["token"]
    wearer.send(Frame(sid, 0, 0, Role.WEARER, "attach", {"token": token}))
    await wearer.expect("attached")
    friend = await connect(port)
    friend.send(Frame(sid, 0, 0, Role.FRIEND, "attach", {"token": token}))
    await friend.expect("attached")
    return wearer, friend, sid, token


def test_manual_photo_session_end_to_end(tmp_path):
    async def scenario():
        server = await start_relay(tmp_path)
        try:
            wearer, friend, sid, _ = await create_and_attach(server.bound_port)

            invitation = await friend.expect("notice")
            assert invitation.body["text"] == INVITATION_TEXT

            # friend transcript mirror, stamped exactly like a real client
            mirror = friend_agent.new_state()
            friend_agent.ingest(mirror, invitation, invitation.ts_ms)

            cmd = Frame(sid, 1, 12345, Role.FRIEND, "cmd", {"text": "T"})
            friend.send(cmd)
            friend_agent.send_text(mirror, "T", 12345)

            received = await friend.expect("notice")
            assert received.body["notice"] == "trigger_received"
            friend_agent.ingest(mirror, received, received.ts_ms)

            led = await wearer.expect("led")
            assert (led.body["color"], led.body["pattern"]) == ("green", "flashing")

            wearer.send(Frame(sid, 1, 0, Role.WEARER, "gesture", {"gesture": "press"}))
            capture_led = await wearer.expect("led")
            assert (capture_led.body["color"], capture_led.body["pattern"]) == ("white", "solid")

            texts = []
            while True:
                frame = await friend.recv()
                friend_agent.ingest(mirror, frame, frame.ts_ms)
                if frame.kind == "media":
                    media = frame
                    break
                texts.append(frame.body["notice"])
            assert texts == ["trigger_approved", "transmitting", "countdown"]
            assert media.body["media_kind"] == "photo"
            assert media.body["size_bytes"] == 200000

            wearer.send(Frame(sid, 2, 0, Role.WEARER, "end", {}))
            ended = await friend.expect("notice")
            assert ended.body["text"] == SESSION_ENDED_TEXT
            friend_agent.ingest(mirror, ended, ended.ts_ms)

            await asyncio.sleep(0.05)
            return sid, mirror
        finally:
            await server.close()

    sid, mirror = asyncio.run(scenario())

    log_path = tmp_path / f"{sid}.fslog"
    frames = read_log(log_path)
    assert frames, "session log is empty"
    kinds = [f.kind for f in frames]
    assert "cmd" in kinds and "media" in kinds and "notice" in kinds
    # frames on disk are valid lines ending in the canonical encoding
    raw_lines = log_path.read_bytes().splitlines()
    assert len(raw_lines) == len(frames)

    replayed = replay_log(log_path)
    assert friend_agent.transcript_digest(replayed) == friend_agent.transcript_digest(mirror)


def test_log_is_ephemeral_by_construction(tmp_path):
    async def scenario():
        server = await start_relay(tmp_path)
        try:
            wearer, friend, sid, _ = await create_and_attach(
                server.bound_port, mode="auto"
            )
            await friend.expect("notice")
            friend.send(Frame(sid, 1, 0, Role.FRIEND, "cmd", {"text": "T"}))
            while True:
                frame = await friend.recv()
                if frame.kind == "media":
                    break
            wearer.send(Frame(sid, 1, 0, Role.WEARER, "end", {}))
            await friend.expect("notice")
            await asyncio.sleep(0.05)
            return sid
        finally:
            await server.close()

    sid = asyncio.run(scenario())
    log_path = tmp_path / f"{sid}.fslog"
    media_frames = [f for f in read_log(log_path) if f.kind == "media"]
    assert media_frames, "expected at least one media frame in the log"
    for frame in media_frames:
        # digest and size only; a million-byte video leaves a tiny record
        assert set(frame.body) == set(MEDIA_BODY_FIELDS)
        assert frame.body["size_bytes"] == 1000000
    for line in log_path.read_bytes().splitlines():
        assert len(line) < 600


def test_attach_rejections(tmp_path):
    async def scenario():
        server = await start_relay(tmp_path)
        try:
            wearer, friend, sid, token = await create_and_attach(server.bound_port)

            # bad token
            other = await connect(server.bound_port)
            other.send(Frame(sid, 0, 0, Role.FRIEND, "attach", {"token": "nope"}))
            err = await other.recv()
            assert (err.kind, err.body["code"]) == ("error", "BadToken")

            # friend slot already taken
            other.send(Frame(sid, 0, 0, Role.FRIEND, "attach", {"token": token}))
            err = await other.recv()
            assert err.body["code"] == "SlotTaken"

            # unknown session
            other.send(Frame("s-missing", 0, 0, Role.FRIEND, "attach", {"token": token}))
            err = await other.recv()
            assert err.body["code"] == "NoSuchSession"

            # explicit id collision
            other.send(Frame("", 0, 0, Role.WEARER, "create_session",
                             {"friend_id": "x", "session_id": sid}))
            err = await other.recv()
            assert err.body["code"] == "IdCollision"

            # junk frame gets an error, not a hangup
            other.writer.write(b"not json\n")
            err = await other.recv()
            assert err.body["code"] == "BadFrame"
            other.close()
        finally:
            await server.close()

    asyncio.run(scenario())


def test_two_sessions_interleave_into_separate_logs(tmp_path):
    async def scenario():
        server = await start_relay(tmp_path)
        try:
            pairs = []
            for _ in range(2):
                wearer, friend, sid, _ = await create_and_attach(server.bound_port)
                await friend.expect("notice")
                pairs.append((wearer, friend, sid))
            for i, (wearer, friend, sid) in enumerate(pairs):
                friend.send(Frame(sid, 1, 100 + i, Role.FRIEND, "cmd", {"text": "T"}))
            for wearer, friend, sid in pairs:
                await friend.expect("notice")
                wearer.send(Frame(sid, 1, 0, Role.WEARER, "end", {}))
                await friend.expect("notice")
            await asyncio.sleep(0.05)
            return [sid for _, _, sid in pairs]
        finally:
            await server.close()

    sids = asyncio.run(scenario())
    assert len(set(sids)) == 2
    for sid in sids:
        frames = read_log(tmp_path / f"{sid}.fslog")
        assert frames
        assert {f.session_id for f in frames} == {sid}


def test_auto_mode_over_live_relay(tmp_path):
    async def scenario():
        server = await start_relay(tmp_path)
        try:
            wearer, friend, sid, _ = await create_and_attach(
                server.bound_port, mode="auto"
            )
            await friend.expect("notice")  # invitation
            friend.send(Frame(sid, 1, 0, Role.FRIEND, "cmd", {"text": "T"}))
            media = await friend.expect("media")
            assert media.body["media_kind"] == "video"
            # wearer saw green (pending), white (capturing), then sent flash
            colors = []
            for _ in range(3):
                frame = await wearer.expect("led")
                colors.append((frame.body["color"], frame.body["pattern"]))
            assert colors == [
                ("green", "flashing"),
                ("white", "solid"),
                ("white", "flashing"),
            ]
        finally:
            await server.close()

    asyncio.run(scenario())


async def ws_client_read(reader) -> tuple:
    """Read one unmasked server frame (the client side of the protocol)."""
    head = await asyncio.wait_for(reader.readexactly(2), timeout=5)
    opcode = head[0] & 0x0F
    n = head[1] & 0x7F
    if n == 126:
        n = int.from_bytes(await reader.readexactly(2), "big")
    elif n == 127:
        n = int.from_bytes(await reader.readexactly(8), "big")
    payload = await asyncio.wait_for(reader.readexactly(n), timeout=5)
    return opcode, payload


def test_websocket_endpoint_bridges_frames(tmp_path):
    async def scenario():
        server = await start_relay(tmp_path)
        try:
            # session created over plain TCP by the wearer
            wearer = await connect(server.bound_port)
            wearer.send(Frame("", 0, 0, Role.WEARER, "create_session",
                              {"friend_id": "web", "params": FAST_PARAMS}))
            created = await wearer.expect("session_created")
            sid, token = created.body["session_id"], created.body["token"]
            wearer.send(Frame(sid, 0, 0, Role.WEARER, "attach", {"token": token}))
            await wearer.expect("attached")

            # friend arrives over a hand-rolled websocket client
            reader, writer = await asyncio.open_connection("127.0.0.1", server.bound_port)
            writer.write(
                b"GET /ws HTTP/1.1\r\n"
                b"Host: x\r\n"
                b"Upgrade: websocket\r\n"
                b"Connection: Upgrade\r\n"
                b"Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n"
                b"Sec-WebSocket-Version: 13\r\n\r\n"
            )
            status = await reader.readline()
            assert b"101" in status
            headers = await ws.read_headers(reader)
            assert headers["sec-websocket-accept"] == ws.accept_key("dGhlIHNhbXBsZSBub25jZQ==")

            def masked(payload: bytes) -> bytes:
                # clients must mask; use a fixed key
                key = b"\x01\x02\x03\x04"
                body = bytes(b ^ key[i & 3] for i, b in enumerate(payload))
                n = len(payload)
                if n < 126:
                    length = bytes([0x80 | n])
                else:
                    length = bytes([0x80 | 126]) + n.to_bytes(2, "big")
                return bytes([0x80 | ws.OP_TEXT]) + length + key + body

            attach = encode_frame(Frame(sid, 0, 0, Role.FRIEND, "attach", {"token": token}))
            writer.write(masked(attach.rstrip(b"\n")))
            await writer.drain()

            opcode, payload = await ws_client_read(reader)
            assert opcode == ws.OP_TEXT
            ack = decode_frame(payload)
            assert ack.kind == "attached"

            opcode, payload = await ws_client_read(reader)
            invitation = decode_frame(payload)
            assert invitation.body["text"] == INVITATION_TEXT

            # trigger over the socket reaches the same wearer agent
            cmd = encode_frame(Frame(sid, 1, 50, Role.FRIEND, "cmd", {"text": "T"}))
            writer.write(masked(cmd.rstrip(b"\n")))
            await writer.drain()
            opcode, payload = await ws_client_read(reader)
            assert decode_frame(payload).body["notice"] == "trigger_received"

            writer.close()
        finally:
            await server.close()

    asyncio.run(scenario())


def test_http_serves_console_files_and_404(tmp_path):
    console = tmp_path / "console"
    console.mkdir()
    (console / "index.html").write_text("<!doctype html><title>console</title>")

    async def scenario():
        server = await start_relay(tmp_path / "logs", console_dir=console)
        try:
            async def get(path):
                reader, writer = await asyncio.open_connection(
                    "127.0.0.1", server.bound_port
                )
                writer.write(f"GET {path} HTTP/1.1\r\nHost: x\r\n\r\n".encode())
                data = await asyncio.wait_for(reader.read(), timeout=5)
                writer.close()
                return data

            ok = await get("/")
            assert ok.startswith(b"HTTP/1.1 200") and b"console" in ok
            missing = await get("/nope.js")
            assert missing.startswith(b"HTTP/1.1 404")
            escape = await get("/../secrets")
            assert escape.startswith(b"HTTP/1.1 404")
        finally:
            await server.close()

    asyncio.run(scenario())
