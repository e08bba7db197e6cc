"""Friend-side agent: an append-only transcript plus a pending indicator.

The friend only ever sees message text and media references; the
transcript digest over those entries is the ground truth for "did two
runs look the same from the friend's chair" — the deniability checks
hinge on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .codec import Frame
from .protocol import (
    FNV64_OFFSET,
    FriendCommand,
    MediaKind,
    RoutingError,
    SessionError,
    fnv1a64,
    parse_friend_text,
)

__all__ = [
    "Direction",
    "MediaRef",
    "TranscriptEntry",
    "FriendState",
    "EMPTY_TRANSCRIPT_DIGEST",
    "new_state",
    "send_text",
    "send_command",
    "ingest",
    "transcript_digest",
    "pending_status",
    "awaiting_for_ms",
]

# Digest of a transcript with no entries: the hash's published zero state.
EMPTY_TRANSCRIPT_DIGEST = f"{FNV64_OFFSET:016x}"


class Direction(str, Enum):
    SENT = "sent"
    RECEIVED = "received"


@dataclass(frozen=True)
class MediaRef:
    kind: MediaKind
    digest: str
    size_bytes: int


@dataclass(frozen=True)
class TranscriptEntry:
    ts_ms: int
    direction: Direction
    content: Union[str, MediaRef]


@dataclass
class FriendState:
    session_id: Optional[str] = None
    entries: list[TranscriptEntry] = field(default_factory=list)
    # timestamp of the unanswered trigger, or None when idle
    awaiting_since_ms: Optional[int] = None
    send_seq: int = 0


def new_state(session_id: Optional[str] = None) -> FriendState:
    """Fresh friend state. Pass session_id when attaching to a known
    session (live endpoints); in simulation the invitation supplies it."""
    return FriendState(session_id=session_id)


def send_text(state: FriendState, text: str, now: int) -> str:
    """Record an outgoing message and return the text to put on the wire.

    Sending a trigger starts the awaiting-response window unless one is
    already open (re-triggers keep the original start time).
    """
    if state.session_id is None:
        raise SessionError("no session joined yet")
    state.entries.append(TranscriptEntry(now, Direction.SENT, text))
    if parse_friend_text(text) is FriendCommand.TRIGGER and state.awaiting_since_ms is None:
        state.awaiting_since_ms = now
    state.send_seq += 1
    return text


def send_command(state: FriendState, cmd: FriendCommand, now: int) -> str:
    return send_text(state, cmd.value, now)


def ingest(state: FriendState, frame: Frame, now: int) -> None:
    """Fold one incoming frame into the transcript.

    `now` is the arrival time and becomes the entry timestamp; live
    endpoints and log replay pass the frame's own ts_ms so both produce
    the same bytes. Frames for other sessions are a routing bug.
    """
    if state.session_id is None:
        state.session_id = frame.session_id
    elif frame.session_id != state.session_id:
        raise RoutingError(
            f"frame for session {frame.session_id!r} reached {state.session_id!r}"
        )
    if frame.kind == "notice":
        text = frame.body.get("text")
        if not isinstance(text, str):
            raise RoutingError("notice frame without text")
        state.entries.append(TranscriptEntry(now, Direction.RECEIVED, text))
        if frame.body.get("notice") in ("unavailable", "triggers_paused"):
            state.awaiting_since_ms = None
    elif frame.kind == "media":
        ref = MediaRef(
            kind=MediaKind(frame.body["media_kind"]),
            digest=frame.body["digest"],
            size_bytes=frame.body["size_bytes"],
        )
        state.entries.append(TranscriptEntry(now, Direction.RECEIVED, ref))
        state.awaiting_since_ms = None
    # anything else (led frames, control chatter) is not friend-facing


def _entry_bytes(entry: TranscriptEntry) -> bytes:
    if isinstance(entry.content, MediaRef):
        ref = entry.content
        body = f"media|{ref.kind.value}|{ref.digest}|{ref.size_bytes}"
    else:
        body = f"txt|{entry.content}"
    return f"{entry.ts_ms}|{entry.direction.value}|{body}".encode("utf-8")


def transcript_digest(state: FriendState) -> str:
    """Order-sensitive 64-bit digest of the whole transcript."""
    h = FNV64_OFFSET
    for entry in state.entries:
        h = fnv1a64(_entry_bytes(entry), h)
        h = fnv1a64(b"\x1e", h)
    return f"{h:016x}"


def pending_status(state: FriendState) -> Optional[int]:
    """Start timestamp of the unanswered trigger, or None when idle."""
    return state.awaiting_since_ms


def awaiting_for_ms(state: FriendState, now: int) -> Optional[int]:
    if state.awaiting_since_ms is None:
        return None
    return now - state.awaiting_since_ms
