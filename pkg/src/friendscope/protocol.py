"""Shared vocabulary for the camera-glasses sharing protocol.

Everything here is plain data: tunable timing parameters, the friend's
command alphabet, notice texts (byte-exact, the friend-facing contract),
LED signal shapes, and synthetic media descriptors. Time is integer
milliseconds relative to the session epoch throughout; nothing in this
module reads a clock.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

__all__ = [
    "FriendscopeError",
    "SessionError",
    "RoutingError",
    "IntegrityError",
    "ProtocolParams",
    "SharingMode",
    "FriendCommand",
    "MediaKind",
    "Gesture",
    "NoticeKind",
    "Notice",
    "LedCause",
    "LedColor",
    "LedPattern",
    "LedSignal",
    "MediaItem",
    "fnv1a64",
    "FNV64_OFFSET",
    "make_media_item",
    "parse_friend_text",
    "render_notice",
    "led_signal_for",
    "LED_PRIORITY",
    "PHOTO_SIZE_BYTES",
    "VIDEO_SIZE_BYTES",
]


class FriendscopeError(Exception):
    """Base for all protocol-level errors."""


class SessionError(FriendscopeError):
    """Raised for operations that need a session in a different state."""


class RoutingError(FriendscopeError):
    """Frame delivered to an endpoint of the wrong session."""


class IntegrityError(FriendscopeError):
    """Recomputed metrics disagree with the embedded ones."""


class SharingMode(str, Enum):
    OFF = "off"
    AUTO = "auto"
    MANUAL = "manual"


class FriendCommand(str, Enum):
    TRIGGER = "T"
    THUMBS_UP = "U"
    THUMBS_DOWN = "D"


class MediaKind(str, Enum):
    PHOTO = "photo"
    VIDEO = "video"


class Gesture(str, Enum):
    PRESS = "press"
    PRESS_HOLD = "press_hold"
    SWIPE_BACK = "swipe_back"


@dataclass(frozen=True)
class ProtocolParams:
    """Timing knobs. Defaults mirror the deployed hardware behavior."""

    trigger_timeout_ms: int = 10_000
    video_len_ms: int = 10_000
    hold_ms: int = 10_000
    photo_capture_ms: int = 1_000
    video_tx_ms: int = 5_000
    photo_tx_ms: int = 1_000
    countdown_start: int = 5
    countdown_interval_ms: int = 1_000
    thumb_flash_ms: int = 2_000
    sent_flash_ms: int = 1_000

    def validate(self) -> "ProtocolParams":
        for name in (
            "trigger_timeout_ms",
            "video_len_ms",
            "hold_ms",
            "photo_capture_ms",
            "countdown_interval_ms",
            "thumb_flash_ms",
            "sent_flash_ms",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        for name in ("video_tx_ms", "photo_tx_ms"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
        if not isinstance(self.countdown_start, int) or self.countdown_start < 0:
            raise ValueError(
                f"countdown_start must be a non-negative integer, got {self.countdown_start!r}"
            )
        max_tx = max(self.video_tx_ms, self.photo_tx_ms)
        if self.countdown_start * self.countdown_interval_ms > max_tx + self.countdown_interval_ms:
            raise ValueError(
                "countdown_start * countdown_interval_ms must not exceed "
                "max transmit time by more than one interval"
            )
        return self

    def with_overrides(self, overrides: dict) -> "ProtocolParams":
        unknown = set(overrides) - set(self.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown params field(s): {sorted(unknown)}")
        return replace(self, **overrides).validate()

    def capture_ms(self, kind: MediaKind) -> int:
        return self.video_len_ms if kind is MediaKind.VIDEO else self.photo_capture_ms

    def tx_ms(self, kind: MediaKind) -> int:
        return self.video_tx_ms if kind is MediaKind.VIDEO else self.photo_tx_ms


# ---------------------------------------------------------------------------
# Notices. Texts are byte-exact; the friend-side transcript hashes them.

class NoticeKind(str, Enum):
    INVITATION = "invitation"
    TRIGGER_RECEIVED = "trigger_received"
    TRIGGER_APPROVED = "trigger_approved"
    TRANSMITTING = "transmitting"
    COUNTDOWN = "countdown"
    UNAVAILABLE = "unavailable"
    MODE_CHANGE = "mode_change"
    TRIGGERS_PAUSED = "triggers_paused"
    SESSION_ENDED = "session_ended"


INVITATION_TEXT = (
    "Hey, I'm out with my camera glasses, and I'd love to bring you along. "
    "Send 'T' to trigger a photo or video of what I'm seeing right now."
)
TRIGGER_RECEIVED_TEXT = "Trigger received!"
TRIGGER_APPROVED_TEMPLATE = "Trigger approved! Hold tight for a {word}!"
TRANSMITTING_TEXT = "Video/photo is being transmitted!"
UNAVAILABLE_TEXT = "Sorry — your friend is unavailable right now."
TRIGGERS_PAUSED_TEXT = (
    "Pausing trigger requests for a bit, but I'll keep sending you "
    "photos/videos whenever possible."
)
SESSION_ENDED_TEXT = "Ending my camera glasses session now. Talk soon!"

_MODE_CHANGE_TEXT = {
    SharingMode.AUTO: (
        "Starting AUTO APPROVE mode now! Send 'T' to trigger a photo/video "
        "of what I'm seeing right now."
    ),
    SharingMode.MANUAL: (
        "Starting MANUAL APPROVE mode now! Send 'T' to trigger a photo/video "
        "of what I'm seeing right now."
    ),
    SharingMode.OFF: (
        "Starting SHARED CAMERA OFF mode now. Pausing trigger requests for a "
        "bit, but I'll keep sending you photos/videos whenever possible."
    ),
}


@dataclass(frozen=True)
class Notice:
    """A friend-facing notification. Payload fields apply per kind only."""

    kind: NoticeKind
    media_kind: Optional[MediaKind] = None
    count: Optional[int] = None
    mode: Optional[SharingMode] = None

    @staticmethod
    def invitation() -> "Notice":
        return Notice(NoticeKind.INVITATION)

    @staticmethod
    def trigger_received() -> "Notice":
        return Notice(NoticeKind.TRIGGER_RECEIVED)

    @staticmethod
    def trigger_approved(media_kind: MediaKind) -> "Notice":
        return Notice(NoticeKind.TRIGGER_APPROVED, media_kind=media_kind)

    @staticmethod
    def transmitting() -> "Notice":
        return Notice(NoticeKind.TRANSMITTING)

    @staticmethod
    def countdown(count: int) -> "Notice":
        return Notice(NoticeKind.COUNTDOWN, count=count)

    @staticmethod
    def unavailable() -> "Notice":
        return Notice(NoticeKind.UNAVAILABLE)

    @staticmethod
    def mode_change(mode: SharingMode) -> "Notice":
        return Notice(NoticeKind.MODE_CHANGE, mode=mode)

    @staticmethod
    def triggers_paused() -> "Notice":
        return Notice(NoticeKind.TRIGGERS_PAUSED)

    @staticmethod
    def session_ended() -> "Notice":
        return Notice(NoticeKind.SESSION_ENDED)


def render_notice(notice: Notice) -> str:
    """Canonical text for a notice. Byte-exact: friends hash these."""
    kind = notice.kind
    if kind is NoticeKind.TRIGGER_APPROVED:
        if notice.media_kind is None:
            raise ValueError("trigger_approved notice needs a media kind")
        return TRIGGER_APPROVED_TEMPLATE.format(word=notice.media_kind.value)
    if notice.media_kind is not None:
        raise ValueError(f"{kind.value} notice does not take a media kind")
    if kind is NoticeKind.COUNTDOWN:
        if notice.count is None or notice.count < 1:
            raise ValueError("countdown notice needs a count >= 1")
        return f"{notice.count}.."
    if kind is NoticeKind.MODE_CHANGE:
        if notice.mode is None:
            raise ValueError("mode_change notice needs a mode")
        return _MODE_CHANGE_TEXT[notice.mode]
    return {
        NoticeKind.INVITATION: INVITATION_TEXT,
        NoticeKind.TRIGGER_RECEIVED: TRIGGER_RECEIVED_TEXT,
        NoticeKind.TRANSMITTING: TRANSMITTING_TEXT,
        NoticeKind.UNAVAILABLE: UNAVAILABLE_TEXT,
        NoticeKind.TRIGGERS_PAUSED: TRIGGERS_PAUSED_TEXT,
        NoticeKind.SESSION_ENDED: SESSION_ENDED_TEXT,
    }[kind]


def parse_friend_text(text: str) -> Optional[FriendCommand]:
    """Map a friend message onto the command alphabet.

    Trims whitespace and ignores case; single-letter T/U/D are commands,
    anything else is plain chat (returned as None, logged by the caller,
    delivered nowhere).
    """
    stripped = text.strip().upper()
    try:
        return FriendCommand(stripped)
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# LED signals.

class LedColor(str, Enum):
    GREEN = "green"
    WHITE = "white"
    BLUE = "blue"
    RED = "red"


class LedPattern(str, Enum):
    FLASHING = "flashing"
    SOLID = "solid"


class LedCause(str, Enum):
    TRIGGER_PENDING = "trigger_pending"
    CAPTURING = "capturing"
    SENT = "sent"
    THUMBS_UP = "thumbs_up"
    THUMBS_DOWN = "thumbs_down"


# Single-signal rule: higher wins the LED, lower waits or is discarded.
LED_PRIORITY = {
    LedCause.TRIGGER_PENDING: 4,
    LedCause.CAPTURING: 3,
    LedCause.SENT: 2,
    LedCause.THUMBS_UP: 1,
    LedCause.THUMBS_DOWN: 1,
}

_LED_SHAPE = {
    LedCause.TRIGGER_PENDING: (LedColor.GREEN, LedPattern.FLASHING),
    LedCause.CAPTURING: (LedColor.WHITE, LedPattern.SOLID),
    LedCause.SENT: (LedColor.WHITE, LedPattern.FLASHING),
    LedCause.THUMBS_UP: (LedColor.BLUE, LedPattern.FLASHING),
    LedCause.THUMBS_DOWN: (LedColor.RED, LedPattern.FLASHING),
}


@dataclass(frozen=True)
class LedSignal:
    color: LedColor
    pattern: LedPattern
    start_ms: int
    end_ms: int
    cause: LedCause


def led_signal_for(
    cause: LedCause,
    now: int,
    params: ProtocolParams,
    media_kind: Optional[MediaKind] = None,
) -> LedSignal:
    """Build the signal a cause produces starting at `now`.

    CAPTURING needs the media kind (photo and video captures run for
    different lengths); every other cause has a fixed duration.
    """
    color, pattern = _LED_SHAPE[cause]
    if cause is LedCause.TRIGGER_PENDING:
        duration = params.trigger_timeout_ms
    elif cause is LedCause.CAPTURING:
        if media_kind is None:
            raise ValueError("capturing signal needs a media kind")
        duration = params.capture_ms(media_kind)
    elif cause is LedCause.SENT:
        duration = params.sent_flash_ms
    else:
        duration = params.thumb_flash_ms
    if cause is not LedCause.CAPTURING and media_kind is not None:
        raise ValueError(f"{cause.value} signal does not take a media kind")
    return LedSignal(color, pattern, now, now + duration, cause)


# ---------------------------------------------------------------------------
# Synthetic media. No payload bytes exist anywhere; items carry a digest
# and a nominal size only.

PHOTO_SIZE_BYTES = 200_000
VIDEO_SIZE_BYTES = 1_000_000

FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3
_FNV64_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, h: int = FNV64_OFFSET) -> int:
    """64-bit FNV-1a. Small, stable, dependency-free; not cryptographic."""
    for byte in data:
        h ^= byte
        h = (h * _FNV64_PRIME) & _FNV64_MASK
    return h


@dataclass(frozen=True)
class MediaItem:
    id: str
    kind: MediaKind
    capture_start_ms: int
    capture_end_ms: int
    size_bytes: int
    payload_digest: str
    trigger_id: Optional[str] = None  # None means wearer-initiated

    @property
    def wearer_initiated(self) -> bool:
        return self.trigger_id is None


def media_digest(media_id: str, kind: MediaKind, capture_start_ms: int) -> str:
    raw = f"{media_id}|{kind.value}|{capture_start_ms}".encode("utf-8")
    return f"{fnv1a64(raw):016x}"


def make_media_item(
    media_id: str,
    kind: MediaKind,
    capture_start_ms: int,
    capture_end_ms: int,
    trigger_id: Optional[str] = None,
) -> MediaItem:
    size = VIDEO_SIZE_BYTES if kind is MediaKind.VIDEO else PHOTO_SIZE_BYTES
    return MediaItem(
        id=media_id,
        kind=kind,
        capture_start_ms=capture_start_ms,
        capture_end_ms=capture_end_ms,
        size_bytes=size,
        payload_digest=media_digest(media_id, kind, capture_start_ms),
        trigger_id=trigger_id,
    )
