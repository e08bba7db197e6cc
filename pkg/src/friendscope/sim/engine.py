"""Discrete-event simulator: the production run_scenario.

One priority queue drives the whole run. Queue entries are keyed
(time, class, push_seq) where class 0 is a frame delivery, 1 a scenario
action, 2 a wake (agent timer or relay transmission step), and push_seq
is a global counter. The class ordering encodes two protocol facts: a
frame already in transit arrives before anything else scheduled at the
same instant (the invitation beats a t=0 trigger), and a wearer action
at an instant happens before timers firing at that instant (a press at
the deadline wins the race).

reference.reference_run recomputes all of this the slow way; reports
from the two must be byte-identical for the same scenario.
"""

from __future__ import annotations

import dataclasses
import heapq
from typing import Optional

from .. import friend as friend_agent
from .. import wearer as wearer_agent
from ..codec import Frame, Role
from ..protocol import (
    FriendCommand,
    Gesture,
    MediaItem,
    Notice,
    SessionError,
    SharingMode,
    parse_friend_text,
)
from ..relay import cmd_frame, media_frame, notice_frame, transmit_plan
from .network import Direction, NetworkSampler
from .report import (
    Metrics,
    SimReport,
    build_led_timeline,
    effect_to_dict,
    host_log,
    transcript_entry_to_dict,
    verify_report,
)
from .scenario import Event, Scenario

SESSION_ID = "sim"

_DELIVERY = 0
_ACTION = 1
_WAKE = 2


class _Job:
    """A media transmission in progress; cancelled if the session ends."""

    __slots__ = ("media", "remaining", "cancelled")

    def __init__(self, media: MediaItem, remaining: int):
        self.media = media
        self.remaining = remaining
        self.cancelled = False


class _Counters:
    """Engine-side live metrics, tallied as events happen."""

    def __init__(self) -> None:
        self.triggers_sent = 0
        self.triggers_coalesced = 0
        self.fulfilled_fast = 0
        self.fulfilled_auto = 0
        self.fulfilled_early = 0
        self.unavailable_count = 0
        self.media_delivered = 0
        self.latencies_ms: list[int] = []
        self.trigger_sent_at: dict[str, int] = {}
        self.fast_media_sent_at: dict[str, int] = {}
        self.sent_media: dict[str, tuple[str, Optional[str]]] = {}

    def on_effect(self, eff) -> None:
        if isinstance(eff, wearer_agent.SendMedia):
            m = eff.media
            self.sent_media[m.payload_digest] = (m.id, m.trigger_id)
            return
        if not isinstance(eff, wearer_agent.Log):
            return
        entry = eff.entry
        event = entry.get("event")
        if event == "trigger_created":
            self.trigger_sent_at[entry["trigger"]] = entry["sent_at_ms"]
        elif event == "trigger_coalesced":
            self.triggers_coalesced += 1
        elif event == "fast_fulfillment":
            self.fulfilled_fast += 1
            self.fast_media_sent_at[entry["media"]] = entry["sent_at_ms"]
        elif event in ("auto_fulfillment", "auto_adopted_capture"):
            self.fulfilled_auto += 1
        elif event in ("early_fulfillment", "capture_end_fulfillment"):
            self.fulfilled_early += 1

    def on_friend_delivery(self, frame: Frame, now: int) -> None:
        if frame.kind == "notice":
            if frame.body.get("notice") == "unavailable":
                self.unavailable_count += 1
            return
        if frame.kind != "media":
            return
        self.media_delivered += 1
        known = self.sent_media.get(frame.body["digest"])
        if known is None:
            return
        media_id, trigger_id = known
        sent_at = self.fast_media_sent_at.get(media_id)
        if sent_at is None and trigger_id is not None:
            sent_at = self.trigger_sent_at.get(trigger_id)
        if sent_at is not None:
            self.latencies_ms.append(now - sent_at)

    def metrics(self) -> Metrics:
        return Metrics(
            triggers_sent=self.triggers_sent,
            triggers_coalesced=self.triggers_coalesced,
            fulfilled_fast=self.fulfilled_fast,
            fulfilled_auto=self.fulfilled_auto,
            fulfilled_early=self.fulfilled_early,
            unavailable_count=self.unavailable_count,
            media_delivered=self.media_delivered,
            latencies_ms=tuple(self.latencies_ms),
        )


class _Engine:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.params = scenario.params
        self.sampler = NetworkSampler(scenario.network)
        self.wstate = wearer_agent.new_state(scenario.params)
        self.fstate = friend_agent.new_state()
        self.effect_log: list[dict] = []
        self.counters = _Counters()
        self.jobs: list[_Job] = []
        self.heap: list[tuple[int, int, int, object]] = []
        self._pushes = 0
        self.emit_seq = 0

    # -- queue --------------------------------------------------------------

    def _push(self, at_ms: int, cls: int, item: object) -> None:
        heapq.heappush(self.heap, (at_ms, cls, self._pushes, item))
        self._pushes += 1

    # -- emission -----------------------------------------------------------

    def _next_seq(self) -> int:
        self.emit_seq += 1
        return self.emit_seq

    def _emit(self, frame: Frame, now: int) -> None:
        direction = (
            Direction.TO_WEARER if frame.sender is Role.FRIEND else Direction.TO_FRIEND
        )
        delay = self.sampler.delay_ms(direction)
        if delay is None:
            self.effect_log.append(
                host_log(now, {"event": "frame_dropped", "kind": frame.kind, "seq": frame.seq})
            )
            return
        self._push(now + delay, _DELIVERY, frame)

    def _execute(self, effects: list, now: int) -> None:
        for eff in effects:
            self.effect_log.append(effect_to_dict(now, eff))
            self.counters.on_effect(eff)
            if isinstance(eff, wearer_agent.SendNotice):
                self._emit(
                    notice_frame(SESSION_ID, self._next_seq(), now, Role.WEARER, eff.notice),
                    now,
                )
            elif isinstance(eff, wearer_agent.SendMedia):
                self._start_transmit(eff.media, now)
            elif isinstance(eff, wearer_agent.ArmTimer):
                self._push(
                    eff.fire_at_ms, _WAKE, ("timer", eff.kind, eff.key, eff.fire_at_ms)
                )

    def _start_transmit(self, media: MediaItem, now: int) -> None:
        plan = transmit_plan(media.kind, now, self.params)
        job = _Job(media, remaining=len(plan.countdown) + 1)
        self.jobs.append(job)
        self._emit(
            notice_frame(SESSION_ID, self._next_seq(), now, Role.RELAY, Notice.transmitting()),
            now,
        )
        for at_ms, n in plan.countdown:
            self._push(at_ms, _WAKE, ("tx", job, n))
        self._push(plan.deliver_at_ms, _WAKE, ("tx", job, None))

    def _cancel_transmits(self, now: int) -> None:
        for job in self.jobs:
            if not job.cancelled and job.remaining > 0:
                job.cancelled = True
                self.effect_log.append(
                    host_log(now, {"event": "transmit_dropped", "media": job.media.id})
                )

    # -- queue item handlers --------------------------------------------------

    def _deliver(self, frame: Frame, now: int) -> None:
        if frame.sender is Role.FRIEND:
            text = frame.body["text"]
            cmd = parse_friend_text(text)
            if cmd is None:
                self.effect_log.append(
                    host_log(now, {"event": "plain_text_ignored", "text": text})
                )
                return
            if self.wstate.session is None:
                self.effect_log.append(
                    host_log(now, {"event": "command_ignored_no_session", "text": text})
                )
                return
            self._execute(
                wearer_agent.on_friend_command(self.wstate, cmd, now, sent_at_ms=frame.ts_ms),
                now,
            )
        else:
            friend_agent.ingest(self.fstate, frame, now)
            self.counters.on_friend_delivery(frame, now)

    def _do_action(self, event: Event) -> None:
        now = event.at_ms
        if event.actor == "friend":
            text = event.args["text"]
            try:
                friend_agent.send_text(self.fstate, text, now)
            except SessionError:
                self.effect_log.append(
                    host_log(now, {"event": "friend_send_ignored", "text": text})
                )
                return
            if parse_friend_text(text) is FriendCommand.TRIGGER:
                self.counters.triggers_sent += 1
            self._emit(cmd_frame(SESSION_ID, self.fstate.send_seq, now, text), now)
            return
        try:
            if event.action == "start_session":
                mode = (
                    SharingMode(event.args["mode"])
                    if "mode" in event.args
                    else self.scenario.initial_mode
                )
                effects = wearer_agent.start_session(
                    self.wstate, event.args.get("friend_id", "friend"), mode, now
                )
            elif event.action == "gesture":
                effects = wearer_agent.on_gesture(
                    self.wstate, Gesture(event.args["gesture"]), now
                )
            elif event.action == "set_mode":
                effects = wearer_agent.set_mode(
                    self.wstate, SharingMode(event.args["mode"]), now
                )
            elif event.action == "end_session":
                effects = wearer_agent.end_session(self.wstate, now)
                self._execute(effects, now)
                self._cancel_transmits(now)
                return
            else:
                raise SessionError(f"unknown action {event.action!r}")
        except SessionError as exc:
            self.effect_log.append(
                host_log(
                    now,
                    {"event": "action_ignored", "action": event.action, "reason": str(exc)},
                )
            )
            return
        self._execute(effects, now)

    def _fire_wake(self, item: tuple, now: int) -> None:
        if item[0] == "timer":
            _, kind, key, fire_at = item
            if not wearer_agent.timer_is_armed(self.wstate, kind, key, fire_at):
                return
            self._execute(wearer_agent.on_timer(self.wstate, kind, key, now), now)
            return
        _, job, n = item
        if job.cancelled:
            return
        job.remaining -= 1
        if n is not None:
            frame = notice_frame(SESSION_ID, self._next_seq(), now, Role.RELAY, Notice.countdown(n))
        else:
            frame = media_frame(SESSION_ID, self._next_seq(), now, job.media)
        self._emit(frame, now)

    # -- main loop ------------------------------------------------------------

    def run(self) -> SimReport:
        for event in self.scenario.events:
            self._push(event.at_ms, _ACTION, event)
        final_t = 0
        while self.heap:
            at_ms, cls, _, item = heapq.heappop(self.heap)
            final_t = at_ms
            if cls == _DELIVERY:
                self._deliver(item, at_ms)  # type: ignore[arg-type]
            elif cls == _ACTION:
                self._do_action(item)  # type: ignore[arg-type]
            else:
                self._fire_wake(item, at_ms)  # type: ignore[arg-type]
        return self._report(final_t)

    def _report(self, final_t: int) -> SimReport:
        report = SimReport(
            scenario_name=self.scenario.name,
            initial_mode=self.scenario.initial_mode.value,
            params=dataclasses.asdict(self.params),
            network=dataclasses.asdict(self.scenario.network),
            final_time_ms=final_t,
            metrics=self.counters.metrics(),
            friend_transcript=tuple(
                transcript_entry_to_dict(e) for e in self.fstate.entries
            ),
            wearer_effect_log=tuple(self.effect_log),
            led_timeline=tuple(build_led_timeline(self.effect_log)),
            transcript_digest=friend_agent.transcript_digest(self.fstate),
        )
        return verify_report(report)


def run_scenario(scenario: Scenario) -> SimReport:
    """Simulate a scenario and return its verified report."""
    return _Engine(scenario).run()
