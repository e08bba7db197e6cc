"""Wearer-side state machine.

Every handler is a deterministic function of (state, input, now): it
mutates the passed-in state and returns an ordered list of Effect values
for the host (relay or simulator) to execute. Handlers never read clocks,
never sleep, and never perform IO, so replaying the same inputs yields a
byte-identical effect log.

Trigger lifecycle
-----------------
A friend 'T' creates at most one pending request (extra ones coalesce
into an acknowledgement). Before the deadline the wearer can fulfill it
with a capture gesture or silently decline it; at the deadline the mode
in effect decides: auto-approve starts a video, manual (and off) sends
the unavailable notice. A declined request sends the *same* unavailable
notice at the *same* instant, so the friend cannot distinguish a decline
from a timeout.

Wearer-initiated media sits in a hold queue for `hold_ms`; a trigger that
arrives while something is held consumes the oldest entry immediately
instead of creating a request ("fast fulfillment").

LED rule
--------
One signal at a time. Priority: trigger-pending green > capturing white
solid > sent white flash > thumb flashes. Arriving thumb flashes wait
their turn and are dropped once they are more than ten seconds old;
anything preempted mid-flash is simply cut short.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .protocol import (
    Gesture,
    FriendCommand,
    LedCause,
    LedColor,
    LedPattern,
    LedSignal,
    MediaItem,
    MediaKind,
    Notice,
    ProtocolParams,
    SessionError,
    SharingMode,
    led_signal_for,
    make_media_item,
)

__all__ = [
    "TimerKind",
    "TriggerOutcome",
    "TriggerRequest",
    "Capture",
    "HoldEntry",
    "Session",
    "WearerState",
    "SendNotice",
    "SendMedia",
    "SetLed",
    "ClearLed",
    "ArmTimer",
    "Log",
    "Effect",
    "DEFERRED_THUMB_MAX_AGE_MS",
    "new_state",
    "start_session",
    "end_session",
    "set_mode",
    "on_friend_command",
    "on_gesture",
    "on_timer",
    "timer_is_armed",
]

# Deferred thumb flashes older than this never show.
DEFERRED_THUMB_MAX_AGE_MS = 10_000


class TimerKind(str, Enum):
    TRIGGER_DEADLINE = "trigger_deadline"
    CAPTURE_END = "capture_end"
    HOLD_RELEASE = "hold_release"
    LED_EXPIRE = "led_expire"


class TriggerOutcome(str, Enum):
    PENDING = "pending"
    DECLINED = "declined"
    FULFILLED_EARLY = "fulfilled_early"
    AUTO_FULFILLED = "auto_fulfilled"
    TIMED_OUT_UNAVAILABLE = "timed_out_unavailable"


@dataclass
class TriggerRequest:
    id: str
    received_at_ms: int
    deadline_ms: int
    mode_at_receipt: SharingMode
    sent_at_ms: int
    outcome: TriggerOutcome = TriggerOutcome.PENDING
    media_id: Optional[str] = None


@dataclass
class Capture:
    media_id: str
    kind: MediaKind
    started_at_ms: int
    ends_at_ms: int
    fulfills: Optional[str] = None  # trigger id


@dataclass
class HoldEntry:
    media: MediaItem
    release_at_ms: int


@dataclass
class Session:
    friend_id: str
    started_at_ms: int


@dataclass(frozen=True)
class SendNotice:
    notice: Notice


@dataclass(frozen=True)
class SendMedia:
    media: MediaItem


@dataclass(frozen=True)
class SetLed:
    signal: LedSignal


@dataclass(frozen=True)
class ClearLed:
    pass


@dataclass(frozen=True)
class ArmTimer:
    fire_at_ms: int
    kind: TimerKind
    key: str


@dataclass(frozen=True)
class Log:
    entry: dict


Effect = Union[SendNotice, SendMedia, SetLed, ClearLed, ArmTimer, Log]


@dataclass
class WearerState:
    params: ProtocolParams
    session: Optional[Session] = None
    mode: SharingMode = SharingMode.MANUAL
    pending: Optional[TriggerRequest] = None
    capture: Optional[Capture] = None
    hold_queue: list[HoldEntry] = field(default_factory=list)
    led_active: Optional[LedSignal] = None
    led_token: Optional[str] = None
    led_deferred: list[tuple[LedCause, int]] = field(default_factory=list)
    # (kind, key) -> fire_at_ms; insertion order is the arm order hosts
    # must respect when several timers share an instant.
    timers: dict[tuple[TimerKind, str], int] = field(default_factory=dict)
    trigger_seq: int = 0
    media_seq: int = 0
    led_seq: int = 0


def new_state(params: Optional[ProtocolParams] = None) -> WearerState:
    return WearerState(params=(params or ProtocolParams()).validate())


def timer_is_armed(state: WearerState, kind: TimerKind, key: str, fire_at_ms: int) -> bool:
    """Hosts fire a scheduled timer only while it is still armed."""
    return state.timers.get((kind, key)) == fire_at_ms


# ---------------------------------------------------------------------------
# internals

def _arm(state: WearerState, effects: list[Effect], kind: TimerKind, key: str, fire_at: int) -> None:
    state.timers[(kind, key)] = fire_at
    effects.append(ArmTimer(fire_at, kind, key))


def _disarm(state: WearerState, kind: TimerKind, key: str) -> None:
    state.timers.pop((kind, key), None)


_TRANSIENT = (LedCause.SENT, LedCause.THUMBS_UP, LedCause.THUMBS_DOWN)


def _led_force(state: WearerState, signal: LedSignal) -> list[Effect]:
    """Make `signal` the active one, superseding whatever was shown."""
    effects: list[Effect] = []
    if state.led_token is not None:
        _disarm(state, TimerKind.LED_EXPIRE, state.led_token)
        state.led_token = None
    state.led_active = signal
    effects.append(SetLed(signal))
    if signal.cause in _TRANSIENT:
        # transient flashes have no other wake-up point, so their expiry
        # gets a timer; green/white expiries coincide with deadline or
        # capture-end timers and are handled there.
        state.led_seq += 1
        token = f"led{state.led_seq}"
        state.led_token = token
        _arm(state, effects, TimerKind.LED_EXPIRE, token, signal.end_ms)
    return effects


def _led_drop_active(state: WearerState) -> None:
    if state.led_token is not None:
        _disarm(state, TimerKind.LED_EXPIRE, state.led_token)
        state.led_token = None
    state.led_active = None


def _led_reconcile(state: WearerState, now: int, truncated: bool) -> list[Effect]:
    """Pick what the LED shows after the active signal went away.

    `truncated` says the previous signal was cut short (not a natural
    expiry); if nothing replaces it the host needs an explicit ClearLed
    to close the visible interval.
    """
    p = state.params
    if state.pending is not None and state.pending.outcome is TriggerOutcome.PENDING:
        sig = LedSignal(
            LedColor.GREEN, LedPattern.FLASHING, now, state.pending.deadline_ms,
            LedCause.TRIGGER_PENDING,
        )
        return _led_force(state, sig)
    if state.capture is not None:
        sig = LedSignal(
            LedColor.WHITE, LedPattern.SOLID, now, state.capture.ends_at_ms,
            LedCause.CAPTURING,
        )
        return _led_force(state, sig)
    while state.led_deferred:
        cause, requested_at = state.led_deferred[0]
        if now - requested_at > DEFERRED_THUMB_MAX_AGE_MS:
            state.led_deferred.pop(0)
            continue
        state.led_deferred.pop(0)
        return _led_force(state, led_signal_for(cause, now, p))
    return [ClearLed()] if truncated else []


def _next_trigger_id(state: WearerState) -> str:
    state.trigger_seq += 1
    return f"t{state.trigger_seq}"


def _next_media_id(state: WearerState) -> str:
    state.media_seq += 1
    return f"m{state.media_seq}"


def _require_session(state: WearerState) -> None:
    if state.session is None:
        raise SessionError("no active session")


# ---------------------------------------------------------------------------
# handlers

def start_session(
    state: WearerState, friend_id: str, mode: SharingMode, now: int
) -> list[Effect]:
    """Open a session and invite the friend. No mode notice at start."""
    if state.session is not None:
        raise SessionError("session already active")
    state.session = Session(friend_id=friend_id, started_at_ms=now)
    state.mode = mode
    return [
        SendNotice(Notice.invitation()),
        Log({"event": "session_started", "friend": friend_id, "mode": mode.value}),
    ]


def end_session(state: WearerState, now: int) -> list[Effect]:
    """Close the session; pending work is abandoned, the LED goes dark."""
    _require_session(state)
    effects: list[Effect] = [SendNotice(Notice.session_ended())]
    if state.led_active is not None:
        effects.append(ClearLed())
    effects.append(Log({"event": "session_ended"}))
    state.session = None
    state.pending = None
    state.capture = None
    state.hold_queue.clear()
    state.timers.clear()
    state.led_active = None
    state.led_token = None
    state.led_deferred.clear()
    return effects


def set_mode(state: WearerState, mode: SharingMode, now: int) -> list[Effect]:
    """Switch sharing mode. Always announces, even for a no-op switch.

    A pending trigger is retained with its deadline unchanged; the mode
    in effect when the deadline fires decides what happens then.
    """
    _require_session(state)
    state.mode = mode
    return [
        SendNotice(Notice.mode_change(mode)),
        Log({"event": "mode_changed", "mode": mode.value}),
    ]


def on_friend_command(
    state: WearerState,
    cmd: FriendCommand,
    now: int,
    sent_at_ms: Optional[int] = None,
) -> list[Effect]:
    """Handle a parsed friend command at its arrival time.

    `sent_at_ms` is the command frame's send timestamp (defaults to now);
    it rides along in the log so fulfillment latency can be recomputed
    from the logs alone.
    """
    _require_session(state)
    sent_at = now if sent_at_ms is None else sent_at_ms
    p = state.params

    if cmd is FriendCommand.TRIGGER:
        if state.mode is SharingMode.OFF:
            return [SendNotice(Notice.triggers_paused())]
        if state.pending is not None:
            return [
                SendNotice(Notice.trigger_received()),
                Log({
                    "event": "trigger_coalesced",
                    "trigger": state.pending.id,
                    "sent_at_ms": sent_at,
                }),
            ]
        if state.hold_queue:
            entry = state.hold_queue.pop(0)
            _disarm(state, TimerKind.HOLD_RELEASE, entry.media.id)
            return [
                SendNotice(Notice.trigger_received()),
                SendNotice(Notice.trigger_approved(entry.media.kind)),
                SendMedia(entry.media),
                Log({
                    "event": "fast_fulfillment",
                    "media": entry.media.id,
                    "sent_at_ms": sent_at,
                }),
            ]
        trigger = TriggerRequest(
            id=_next_trigger_id(state),
            received_at_ms=now,
            deadline_ms=now + p.trigger_timeout_ms,
            mode_at_receipt=state.mode,
            sent_at_ms=sent_at,
        )
        state.pending = trigger
        effects: list[Effect] = [SendNotice(Notice.trigger_received())]
        effects += _led_force(
            state, led_signal_for(LedCause.TRIGGER_PENDING, now, p)
        )
        _arm(state, effects, TimerKind.TRIGGER_DEADLINE, trigger.id, trigger.deadline_ms)
        effects.append(Log({
            "event": "trigger_created",
            "trigger": trigger.id,
            "deadline_ms": trigger.deadline_ms,
            "sent_at_ms": sent_at,
        }))
        return effects

    # thumbs: lowest LED priority, shown now only if the LED is free
    cause = (
        LedCause.THUMBS_UP if cmd is FriendCommand.THUMBS_UP else LedCause.THUMBS_DOWN
    )
    effects = []
    if state.led_active is None:
        effects += _led_force(state, led_signal_for(cause, now, p))
        shown = "now"
    else:
        state.led_deferred.append((cause, now))
        shown = "deferred"
    effects.append(Log({"event": "thumbs", "cause": cause.value, "shown": shown}))
    return effects


def on_gesture(state: WearerState, gesture: Gesture, now: int) -> list[Effect]:
    """Device gestures: press = photo, press-and-hold = video, swipe = decline."""
    _require_session(state)
    p = state.params

    if state.capture is not None:
        return [Log({"event": "gesture_ignored_during_capture", "gesture": gesture.value})]

    if gesture is Gesture.SWIPE_BACK:
        if state.pending is not None and state.pending.outcome is TriggerOutcome.PENDING:
            trigger = state.pending
            trigger.outcome = TriggerOutcome.DECLINED
            # the deadline timer stays armed: the friend still gets the
            # unavailable notice at exactly the deadline, same as a timeout
            cut = state.led_active is not None and state.led_active.end_ms > now
            _led_drop_active(state)
            effects = _led_reconcile(state, now, truncated=cut)
            effects.append(Log({"event": "trigger_declined", "trigger": trigger.id}))
            return effects
        return [Log({"event": "gesture_ignored", "gesture": gesture.value})]

    kind = MediaKind.PHOTO if gesture is Gesture.PRESS else MediaKind.VIDEO
    media_id = _next_media_id(state)
    ends_at = now + p.capture_ms(kind)
    fulfills: Optional[str] = None
    if state.pending is not None and state.pending.outcome is TriggerOutcome.PENDING:
        trigger = state.pending
        trigger.outcome = TriggerOutcome.FULFILLED_EARLY
        fulfills = trigger.id
        _disarm(state, TimerKind.TRIGGER_DEADLINE, trigger.id)
        log_entry = {
            "event": "early_fulfillment",
            "trigger": trigger.id,
            "media": media_id,
        }
    else:
        log_entry = {"event": "capture_started", "media": media_id}
    state.capture = Capture(
        media_id=media_id, kind=kind, started_at_ms=now, ends_at_ms=ends_at,
        fulfills=fulfills,
    )
    _led_drop_active(state)
    effects = _led_force(state, led_signal_for(LedCause.CAPTURING, now, p, kind))
    _arm(state, effects, TimerKind.CAPTURE_END, media_id, ends_at)
    effects.append(Log(log_entry))
    return effects


def on_timer(state: WearerState, kind: TimerKind, key: str, now: int) -> list[Effect]:
    """Fire an armed timer. Unknown or stale timers are ignored with a log."""
    if state.session is None or state.timers.pop((kind, key), None) is None:
        return [Log({"event": "stale_timer", "timer": kind.value, "key": key})]

    if kind is TimerKind.TRIGGER_DEADLINE:
        return _on_trigger_deadline(state, key, now)
    if kind is TimerKind.CAPTURE_END:
        return _on_capture_end(state, key, now)
    if kind is TimerKind.HOLD_RELEASE:
        return _on_hold_release(state, key, now)
    if kind is TimerKind.LED_EXPIRE:
        if state.led_token == key and state.led_active is not None:
            state.led_active = None
            state.led_token = None
            return _led_reconcile(state, now, truncated=False)
        return []
    return [Log({"event": "stale_timer", "timer": kind.value, "key": key})]


def _on_trigger_deadline(state: WearerState, key: str, now: int) -> list[Effect]:
    p = state.params
    trigger = state.pending
    if trigger is None or trigger.id != key:
        return [Log({"event": "stale_timer", "timer": "trigger_deadline", "key": key})]

    if trigger.outcome is TriggerOutcome.DECLINED:
        # indistinguishable from a timeout: same notice, same instant
        state.pending = None
        return [
            SendNotice(Notice.unavailable()),
            Log({"event": "declined_unavailable", "trigger": trigger.id}),
        ]

    if trigger.outcome is not TriggerOutcome.PENDING:
        return [Log({"event": "stale_timer", "timer": "trigger_deadline", "key": key})]

    if state.mode is SharingMode.AUTO:
        trigger.outcome = TriggerOutcome.AUTO_FULFILLED
        if state.capture is not None:
            # a capture is already rolling: it becomes the fulfillment
            state.capture.fulfills = trigger.id
            cut = state.led_active is not None and state.led_active.end_ms > now
            _led_drop_active(state)
            effects = _led_reconcile(state, now, truncated=cut)
            effects.append(Log({
                "event": "auto_adopted_capture",
                "trigger": trigger.id,
                "media": state.capture.media_id,
            }))
            return effects
        media_id = _next_media_id(state)
        ends_at = now + p.video_len_ms
        state.capture = Capture(
            media_id=media_id, kind=MediaKind.VIDEO, started_at_ms=now,
            ends_at_ms=ends_at, fulfills=trigger.id,
        )
        _led_drop_active(state)
        effects = _led_force(
            state, led_signal_for(LedCause.CAPTURING, now, p, MediaKind.VIDEO)
        )
        _arm(state, effects, TimerKind.CAPTURE_END, media_id, ends_at)
        effects.append(Log({
            "event": "auto_fulfillment", "trigger": trigger.id, "media": media_id,
        }))
        return effects

    # manual mode declines at the deadline; off mode (switched after the
    # trigger arrived) behaves the same so the exchange still closes
    trigger.outcome = TriggerOutcome.TIMED_OUT_UNAVAILABLE
    state.pending = None
    cut = state.led_active is not None and state.led_active.end_ms > now
    _led_drop_active(state)
    effects = [SendNotice(Notice.unavailable())]
    effects += _led_reconcile(state, now, truncated=cut)
    effects.append(Log({"event": "trigger_timed_out", "trigger": trigger.id}))
    return effects


def _on_capture_end(state: WearerState, key: str, now: int) -> list[Effect]:
    p = state.params
    cap = state.capture
    if cap is None or cap.media_id != key:
        return [Log({"event": "stale_timer", "timer": "capture_end", "key": key})]
    state.capture = None

    fulfills = cap.fulfills
    log_event = "fulfillment_sent"
    if fulfills is None and (
        state.pending is not None
        and state.pending.outcome is TriggerOutcome.PENDING
    ):
        # a trigger arrived while this capture was rolling; completing the
        # capture answers it immediately, like fast fulfillment at age zero
        fulfills = state.pending.id
        state.pending.outcome = TriggerOutcome.FULFILLED_EARLY
        _disarm(state, TimerKind.TRIGGER_DEADLINE, fulfills)
        log_event = "capture_end_fulfillment"

    media = make_media_item(
        cap.media_id, cap.kind, cap.started_at_ms, now, trigger_id=fulfills
    )

    if fulfills is not None:
        if state.pending is not None and state.pending.id == fulfills:
            state.pending.media_id = media.id
            state.pending = None
        _led_drop_active(state)
        effects: list[Effect] = [
            SendNotice(Notice.trigger_approved(media.kind)),
            SendMedia(media),
        ]
        effects += _led_force(state, led_signal_for(LedCause.SENT, now, p))
        effects.append(Log({
            "event": log_event, "trigger": fulfills, "media": media.id,
        }))
        return effects

    release_at = now + p.hold_ms
    state.hold_queue.append(HoldEntry(media=media, release_at_ms=release_at))
    _led_drop_active(state)
    effects = _led_force(state, led_signal_for(LedCause.SENT, now, p))
    _arm(state, effects, TimerKind.HOLD_RELEASE, media.id, release_at)
    effects.append(Log({
        "event": "media_held", "media": media.id, "release_at_ms": release_at,
    }))
    return effects


def _on_hold_release(state: WearerState, key: str, now: int) -> list[Effect]:
    for i, entry in enumerate(state.hold_queue):
        if entry.media.id == key:
            state.hold_queue.pop(i)
            return [
                SendMedia(entry.media),
                Log({"event": "hold_released", "media": entry.media.id}),
            ]
    return [Log({"event": "stale_timer", "timer": "hold_release", "key": key})]
