"""Vocabulary-level checks: texts, parsing, LED shapes, media descriptors.

Expected strings are spelled out here as independent literals on purpose;
they are the friend-facing contract and must never drift.
"""

import pytest
from hypothesis import given, strategies as st

from friendscope.protocol import (
    FNV64_OFFSET,
    LED_PRIORITY,
    PHOTO_SIZE_BYTES,
    VIDEO_SIZE_BYTES,
    FriendCommand,
    Gesture,
    LedCause,
    LedColor,
    LedPattern,
    MediaKind,
    Notice,
    NoticeKind,
    ProtocolParams,
    SharingMode,
    fnv1a64,
    led_signal_for,
    make_media_item,
    media_digest,
    parse_friend_text,
    render_notice,
)


class TestNoticeTexts:
    def test_invitation(self):
        assert render_notice(Notice.invitation()) == (
            "Hey, I'm out with my camera glasses, and I'd love to bring you "
            "along. Send 'T' to trigger a photo or video of what I'm seeing "
            "right now."
        )

    def test_trigger_received(self):
        assert render_notice(Notice.trigger_received()) == "Trigger received!"

    def test_trigger_approved_substitutes_media_word(self):
        assert (
            render_notice(Notice.trigger_approved(MediaKind.PHOTO))
            == "Trigger approved! Hold tight for a photo!"
        )
        assert (
            render_notice(Notice.trigger_approved(MediaKind.VIDEO))
            == "Trigger approved! Hold tight for a video!"
        )

    def test_transmitting(self):
        assert render_notice(Notice.transmitting()) == "Video/photo is being transmitted!"

    def test_countdown(self):
        assert render_notice(Notice.countdown(5)) == "5.."
        assert render_notice(Notice.countdown(1)) == "1.."

    def test_unavailable(self):
        assert render_notice(Notice.unavailable()) == (
            "Sorry — your friend is unavailable right now."
        )

    def test_mode_change_auto(self):
        assert render_notice(Notice.mode_change(SharingMode.AUTO)) == (
            "Starting AUTO APPROVE mode now! Send 'T' to trigger a "
            "photo/video of what I'm seeing right now."
        )

    def test_mode_change_manual(self):
        assert render_notice(Notice.mode_change(SharingMode.MANUAL)) == (
            "Starting MANUAL APPROVE mode now! Send 'T' to trigger a "
            "photo/video of what I'm seeing right now."
        )

    def test_mode_change_off(self):
        assert render_notice(Notice.mode_change(SharingMode.OFF)) == (
            "Starting SHARED CAMERA OFF mode now. Pausing trigger requests "
            "for a bit, but I'll keep sending you photos/videos whenever "
            "possible."
        )

    def test_triggers_paused_reuses_off_sentence(self):
        paused = render_notice(Notice.triggers_paused())
        assert paused == (
            "Pausing trigger requests for a bit, but I'll keep sending you "
            "photos/videos whenever possible."
        )
        assert paused in render_notice(Notice.mode_change(SharingMode.OFF))

    def test_session_ended(self):
        assert render_notice(Notice.session_ended()) == (
            "Ending my camera glasses session now. Talk soon!"
        )

    def test_approved_requires_media_kind(self):
        with pytest.raises(ValueError):
            render_notice(Notice(NoticeKind.TRIGGER_APPROVED))

    def test_media_kind_rejected_elsewhere(self):
        with pytest.raises(ValueError):
            render_notice(Notice(NoticeKind.UNAVAILABLE, media_kind=MediaKind.PHOTO))

    def test_countdown_requires_positive_count(self):
        with pytest.raises(ValueError):
            render_notice(Notice(NoticeKind.COUNTDOWN, count=0))


class TestParseFriendText:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("T", FriendCommand.TRIGGER),
            ("t", FriendCommand.TRIGGER),
            (" u ", FriendCommand.THUMBS_UP),
            ("U", FriendCommand.THUMBS_UP),
            ("d\n", FriendCommand.THUMBS_DOWN),
            ("D", FriendCommand.THUMBS_DOWN),
        ],
    )
    def test_commands(self, text, expected):
        assert parse_friend_text(text) is expected

    @pytest.mark.parametrize("text", ["TD", "", "  ", "hello", "TT", "u d", "🙂"])
    def test_plain_text(self, text):
        assert parse_friend_text(text) is None

    @given(st.text(max_size=12))
    def test_parse_is_total_and_stable(self, text):
        first = parse_friend_text(text)
        assert parse_friend_text(text) is first
        if first is not None:
            # whatever parsed once parses the same after normalization
            assert parse_friend_text(first.value) is first


class TestLedMapping:
    def setup_method(self):
        self.params = ProtocolParams()

    def test_trigger_pending_green_flashing_for_timeout(self):
        sig = led_signal_for(LedCause.TRIGGER_PENDING, 42, self.params)
        assert (sig.color, sig.pattern) == (LedColor.GREEN, LedPattern.FLASHING)
        assert (sig.start_ms, sig.end_ms) == (42, 10_042)

    def test_capturing_white_solid_tracks_kind(self):
        photo = led_signal_for(LedCause.CAPTURING, 42, self.params, MediaKind.PHOTO)
        assert (photo.color, photo.pattern) == (LedColor.WHITE, LedPattern.SOLID)
        assert (photo.start_ms, photo.end_ms) == (42, 1_042)
        video = led_signal_for(LedCause.CAPTURING, 0, self.params, MediaKind.VIDEO)
        assert (video.start_ms, video.end_ms) == (0, 10_000)

    def test_sent_white_flash(self):
        sig = led_signal_for(LedCause.SENT, 7, self.params)
        assert (sig.color, sig.pattern) == (LedColor.WHITE, LedPattern.FLASHING)
        assert sig.end_ms - sig.start_ms == 1_000

    def test_thumbs(self):
        up = led_signal_for(LedCause.THUMBS_UP, 0, self.params)
        down = led_signal_for(LedCause.THUMBS_DOWN, 0, self.params)
        assert (up.color, up.pattern) == (LedColor.BLUE, LedPattern.FLASHING)
        assert (down.color, down.pattern) == (LedColor.RED, LedPattern.FLASHING)
        assert up.end_ms == down.end_ms == 2_000

    def test_color_pattern_pairs_are_distinct_per_cause(self):
        seen = set()
        for cause in LedCause:
            kind = MediaKind.PHOTO if cause is LedCause.CAPTURING else None
            sig = led_signal_for(cause, 0, self.params, kind)
            seen.add((sig.color, sig.pattern, sig.cause))
        assert len(seen) == len(LedCause)

    def test_capturing_requires_kind_and_others_reject_it(self):
        with pytest.raises(ValueError):
            led_signal_for(LedCause.CAPTURING, 0, self.params)
        with pytest.raises(ValueError):
            led_signal_for(LedCause.SENT, 0, self.params, MediaKind.PHOTO)

    def test_priority_order(self):
        assert (
            LED_PRIORITY[LedCause.TRIGGER_PENDING]
            > LED_PRIORITY[LedCause.CAPTURING]
            > LED_PRIORITY[LedCause.SENT]
            > LED_PRIORITY[LedCause.THUMBS_UP]
            == LED_PRIORITY[LedCause.THUMBS_DOWN]
        )


class TestParams:
    def test_defaults_validate(self):
        p = ProtocolParams().validate()
        assert p.trigger_timeout_ms == 10_000
        assert p.video_len_ms == 10_000
        assert p.hold_ms == 10_000
        assert p.photo_capture_ms == 1_000
        assert p.video_tx_ms == 5_000
        assert p.photo_tx_ms == 1_000
        assert p.countdown_start == 5
        assert p.countdown_interval_ms == 1_000
        assert p.thumb_flash_ms == 2_000
        assert p.sent_flash_ms == 1_000

    @pytest.mark.parametrize(
        "overrides",
        [
            {"trigger_timeout_ms": 0},
            {"video_len_ms": -5},
            {"video_tx_ms": -1},
            {"countdown_interval_ms": 0},
            {"countdown_start": -1},
            {"countdown_start": 12},  # 12s of ticks cannot fit a 5s transmit
        ],
    )
    def test_bad_values_rejected(self, overrides):
        with pytest.raises(ValueError):
            ProtocolParams().with_overrides(overrides)

    def test_unknown_override_rejected(self):
        with pytest.raises(ValueError):
            ProtocolParams().with_overrides({"nope": 3})

    def test_zero_transmit_allowed(self):
        p = ProtocolParams().with_overrides(
            {"video_tx_ms": 0, "photo_tx_ms": 0, "countdown_start": 1}
        )
        assert p.tx_ms(MediaKind.VIDEO) == 0


class TestMedia:
    def test_fnv_reference_vectors(self):
        # Published FNV-1a 64 vectors.
        assert fnv1a64(b"") == FNV64_OFFSET == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"foobar") == 0x85944171F73967E8

    def test_sizes(self):
        photo = make_media_item("m1", MediaKind.PHOTO, 0, 1000)
        video = make_media_item("m2", MediaKind.VIDEO, 0, 10_000)
        assert photo.size_bytes == PHOTO_SIZE_BYTES == 200_000
        assert video.size_bytes == VIDEO_SIZE_BYTES == 1_000_000

    def test_digest_is_stable_and_input_sensitive(self):
        d = media_digest("m1", MediaKind.PHOTO, 0)
        assert d == media_digest("m1", MediaKind.PHOTO, 0)
        assert len(d) == 16 and int(d, 16) >= 0
        assert d != media_digest("m2", MediaKind.PHOTO, 0)
        assert d != media_digest("m1", MediaKind.VIDEO, 0)
        assert d != media_digest("m1", MediaKind.PHOTO, 1)

    def test_item_digest_matches_free_function(self):
        item = make_media_item("m3", MediaKind.VIDEO, 500, 10_500, trigger_id="t1")
        assert item.payload_digest == media_digest("m3", MediaKind.VIDEO, 500)
        assert not item.wearer_initiated
        assert make_media_item("m4", MediaKind.PHOTO, 0, 1000).wearer_initiated


def test_enum_wire_values():
    assert [m.value for m in SharingMode] == ["off", "auto", "manual"]
    assert [g.value for g in Gesture] == ["press", "press_hold", "swipe_back"]
    assert [c.value for c in FriendCommand] == ["T", "U", "D"]
