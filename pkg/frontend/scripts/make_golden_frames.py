#!/usr/bin/env python3
"""Regenerate tests/fixtures/golden_frames.json from the relay's codec.

The fixture pins the wire encoding: for each sample frame it stores the
field values and the exact line the relay-side encoder produces. The
TypeScript codec test must reproduce every line byte for byte.

Run from anywhere: python3 frontend/scripts/make_golden_frames.py
(needs the friendscope package importable, e.g. installed with pip -e).
"""

import json
from pathlib import Path

from friendscope import relay
from friendscope.codec import Frame, Role, encode_frame
from friendscope.protocol import (
    LedCause,
    MediaKind,
    Notice,
    ProtocolParams,
    SharingMode,
    led_signal_for,
    make_media_item,
)

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden_frames.json"


def sample_frames() -> list[Frame]:
    params = ProtocolParams()
    frames = [
        relay.cmd_frame("s1", 1, 1000, "T"),
        relay.cmd_frame("s1", 2, 1500, "nice — tell me more!"),
        relay.notice_frame("s1", 3, 0, Role.WEARER, Notice.invitation()),
        relay.notice_frame("s1", 4, 1000, Role.WEARER, Notice.trigger_received()),
        relay.notice_frame("s1", 5, 5000, Role.WEARER, Notice.trigger_approved(MediaKind.PHOTO)),
        relay.notice_frame("s1", 6, 5000, Role.RELAY, Notice.transmitting()),
        relay.notice_frame("s1", 7, 5000, Role.RELAY, Notice.countdown(1)),
        relay.notice_frame("s1", 8, 11000, Role.WEARER, Notice.unavailable()),
        relay.notice_frame("s1", 9, 12000, Role.WEARER, Notice.mode_change(SharingMode.AUTO)),
        relay.notice_frame("s1", 10, 13000, Role.WEARER, Notice.triggers_paused()),
        relay.notice_frame("s1", 11, 20000, Role.WEARER, Notice.session_ended()),
        relay.media_frame(
            "s1", 12, 6000,
            make_media_item("m1", MediaKind.PHOTO, 4000, 5000, trigger_id="t1"),
        ),
        relay.media_frame(
            "s1", 13, 25000,
            make_media_item("m2", MediaKind.VIDEO, 10000, 20000, trigger_id=None),
        ),
        relay.led_frame(
            "s1", 14, 1000,
            led_signal_for(LedCause.TRIGGER_PENDING, 1000, params),
        ),
        relay.led_clear_frame("s1", 15, 6000),
        Frame("", 0, 0, Role.WEARER, "create_session",
              {"friend_id": "sam", "mode": "manual",
               "params": {"trigger_timeout_ms": 3000}}),
        Frame("s1", 0, 0, Role.RELAY, "session_created",
              {"session_id": "s1", "token": "aabbccdd" * 4}),
        Frame("s1", 0, 0, Role.FRIEND, "attach", {"token": "aabbccdd" * 4}),
        Frame("s1", 0, 0, Role.RELAY, "attached", {"role": "friend", "now_ms": 1234}),
        Frame("s1", 1, 42, Role.WEARER, "gesture", {"gesture": "press_hold"}),
        Frame("s1", 2, 43, Role.WEARER, "set_mode", {"mode": "off"}),
        Frame("s1", 3, 44, Role.WEARER, "end", {}),
        Frame("s1", 0, 9, Role.RELAY, "error",
              {"code": "BadToken", "message": "token mismatch"}),
    ]
    return frames


def main() -> None:
    rows = []
    for frame in sample_frames():
        rows.append({
            "frame": {
                "v": frame.v,
                "session_id": frame.session_id,
                "seq": frame.seq,
                "ts_ms": frame.ts_ms,
                "from": frame.sender.value,
                "kind": frame.kind,
                "body": frame.body,
            },
            "line": encode_frame(frame).decode("utf-8"),
        })
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(rows, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} golden frames to {OUT}")


if __name__ == "__main__":
    main()
