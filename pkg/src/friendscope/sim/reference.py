"""Naive reference simulator: a millisecond tick loop, no event queue.

This is the slow, obviously-correct twin of engine.run_scenario. It
walks simulated time one instant at a time; at each instant it keeps
scanning three flat lists (frames in transit, upcoming scenario
actions, armed wakes) until nothing else is due, then steps forward.
Ticks where nothing can possibly happen are skipped by jumping straight
to the next due instant, which changes nothing observable because no
list is touched in between.

The processing order within one instant is fixed: every frame already
in transit and due is delivered first (in send order), then one
scenario action runs, then one wake fires, and after every single step
the scan starts over from deliveries. Wakes are kept in arm order;
media transmission timing is computed here from the raw parameters,
deliberately not sharing the engine's scheduling code.

Everything engine.run_scenario must agree with, byte for byte, lives
in the report this produces.
"""

from __future__ import annotations

import dataclasses
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
from ..relay import cmd_frame, media_frame, notice_frame
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
from .scenario import Scenario

SESSION_ID = "sim"


class _TxJob:
    """One media item moving through the simulated relay."""

    def __init__(self, media: MediaItem, steps: int):
        self.media = media
        self.remaining = steps
        self.cancelled = False


class _Flight:
    def __init__(self, deliver_at_ms: int, frame: Frame):
        self.deliver_at_ms = deliver_at_ms
        self.frame = frame


class _Wake:
    # payload: ("timer", kind, key, fire_at) or ("tx", job, step_n or None)
    def __init__(self, fire_at_ms: int, payload: tuple):
        self.fire_at_ms = fire_at_ms
        self.payload = payload


class _Tally:
    """Live counters, updated as the run proceeds.

    compute_metrics() rebuilds the same numbers from the logs afterwards;
    keeping both lets verify_report catch a simulator that drops rows.
    """

    def __init__(self) -> None:
        self.triggers_sent = 0
        self.coalesced = 0
        self.fast = 0
        self.auto = 0
        self.early = 0
        self.unavailable = 0
        self.media_delivered = 0
        self.latencies: list[int] = []
        self._sent_at_by_trigger: dict[str, int] = {}
        self._fast_sent_at: dict[str, int] = {}
        self._origin_by_digest: dict[str, tuple[str, Optional[str]]] = {}

    def friend_sent(self, text: str) -> None:
        if parse_friend_text(text) is FriendCommand.TRIGGER:
            self.triggers_sent += 1

    def effect(self, eff) -> None:
        if isinstance(eff, wearer_agent.Log):
            entry = eff.entry
            event = entry.get("event")
            if event == "trigger_created":
                self._sent_at_by_trigger[entry["trigger"]] = entry["sent_at_ms"]
            elif event == "trigger_coalesced":
                self.coalesced += 1
            elif event == "fast_fulfillment":
                self.fast += 1
                self._fast_sent_at[entry["media"]] = entry["sent_at_ms"]
            elif event in ("auto_fulfillment", "auto_adopted_capture"):
                self.auto += 1
            elif event in ("early_fulfillment", "capture_end_fulfillment"):
                self.early += 1
        elif isinstance(eff, wearer_agent.SendMedia):
            media = eff.media
            self._origin_by_digest[media.payload_digest] = (media.id, media.trigger_id)

    def friend_received(self, frame: Frame, now: int) -> None:
        if frame.kind == "notice":
            if frame.body.get("notice") == "unavailable":
                self.unavailable += 1
        elif frame.kind == "media":
            self.media_delivered += 1
            origin = self._origin_by_digest.get(frame.body["digest"])
            if origin is None:
                return
            media_id, trigger_id = origin
            base = self._fast_sent_at.get(media_id)
            if base is None and trigger_id is not None:
                base = self._sent_at_by_trigger.get(trigger_id)
            if base is not None:
                self.latencies.append(now - base)

    def metrics(self) -> Metrics:
        return Metrics(
            triggers_sent=self.triggers_sent,
            triggers_coalesced=self.coalesced,
            fulfilled_fast=self.fast,
            fulfilled_auto=self.auto,
            fulfilled_early=self.early,
            unavailable_count=self.unavailable,
            media_delivered=self.media_delivered,
            latencies_ms=tuple(self.latencies),
        )


class _ReferenceRun:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.params = scenario.params
        self.sampler = NetworkSampler(scenario.network)
        self.wstate = wearer_agent.new_state(scenario.params)
        self.fstate = friend_agent.new_state()
        self.effect_log: list[dict] = []
        self.tally = _Tally()
        self.in_flight: list[_Flight] = []
        self.wakes: list[_Wake] = []
        self.jobs: list[_TxJob] = []
        self.actions = list(scenario.events)
        self.next_action = 0
        self.emit_seq = 0

    # -- emission ---------------------------------------------------------

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
        self.in_flight.append(_Flight(now + delay, frame))

    def _execute(self, effects: list, now: int) -> None:
        for eff in effects:
            self.effect_log.append(effect_to_dict(now, eff))
            self.tally.effect(eff)
            if isinstance(eff, wearer_agent.SendNotice):
                self._emit(
                    notice_frame(SESSION_ID, self._next_seq(), now, Role.WEARER, eff.notice),
                    now,
                )
            elif isinstance(eff, wearer_agent.SendMedia):
                self._start_transmit(eff.media, now)
            elif isinstance(eff, wearer_agent.ArmTimer):
                self.wakes.append(
                    _Wake(eff.fire_at_ms, ("timer", eff.kind, eff.key, eff.fire_at_ms))
                )
            # SetLed / ClearLed / Log leave only their log rows

    def _start_transmit(self, media: MediaItem, now: int) -> None:
        p = self.params
        tx = p.video_tx_ms if media.kind.value == "video" else p.photo_tx_ms
        deliver_at = now + tx
        ticks = p.countdown_start
        if ticks * p.countdown_interval_ms > tx:
            ticks = tx // p.countdown_interval_ms
        job = _TxJob(media, steps=ticks + 1)
        self.jobs.append(job)
        self._emit(
            notice_frame(SESSION_ID, self._next_seq(), now, Role.RELAY, Notice.transmitting()),
            now,
        )
        n = ticks
        while n >= 1:
            self.wakes.append(
                _Wake(deliver_at - n * p.countdown_interval_ms, ("tx", job, n))
            )
            n -= 1
        self.wakes.append(_Wake(deliver_at, ("tx", job, None)))

    def _cancel_transmits(self, now: int) -> None:
        for job in self.jobs:
            if not job.cancelled and job.remaining > 0:
                job.cancelled = True
                self.effect_log.append(
                    host_log(now, {"event": "transmit_dropped", "media": job.media.id})
                )

    # -- the three step kinds ----------------------------------------------

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
            effects = wearer_agent.on_friend_command(
                self.wstate, cmd, now, sent_at_ms=frame.ts_ms
            )
            self._execute(effects, now)
        else:
            friend_agent.ingest(self.fstate, frame, now)
            self.tally.friend_received(frame, now)

    def _do_action(self, event) -> None:
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
            self.tally.friend_sent(text)
            self._emit(cmd_frame(SESSION_ID, self.fstate.send_seq, now, text), now)
            return
        try:
            if event.action == "start_session":
                mode = (
                    SharingMode(event.args["mode"])
                    if "mode" in event.args
                    else self.scenario.initial_mode
                )
                friend_id = event.args.get("friend_id", "friend")
                effects = wearer_agent.start_session(self.wstate, friend_id, mode, now)
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
            else:  # unreachable for validated scenarios
                raise SessionError(f"unknown action {event.action!r}")
        except SessionError as exc:
            self.effect_log.append(
                host_log(now, {"event": "action_ignored", "action": event.action, "reason": str(exc)})
            )
            return
        self._execute(effects, now)

    def _fire_wake(self, wake: _Wake, now: int) -> None:
        payload = wake.payload
        if payload[0] == "timer":
            _, kind, key, fire_at = payload
            if not wearer_agent.timer_is_armed(self.wstate, kind, key, fire_at):
                return  # disarmed since it was scheduled
            self._execute(wearer_agent.on_timer(self.wstate, kind, key, now), now)
            return
        _, job, step = payload
        if job.cancelled:
            return
        job.remaining -= 1
        if step is not None:
            frame = notice_frame(
                SESSION_ID, self._next_seq(), now, Role.RELAY, Notice.countdown(step)
            )
        else:
            frame = media_frame(SESSION_ID, self._next_seq(), now, job.media)
        self._emit(frame, now)

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimReport:
        t = 0
        while True:
            progressed = True
            while progressed:
                progressed = False
                i = 0
                while i < len(self.in_flight):
                    flight = self.in_flight[i]
                    if flight.deliver_at_ms <= t:
                        self.in_flight.pop(i)
                        self._deliver(flight.frame, t)
                        progressed = True
                    else:
                        i += 1
                if (
                    self.next_action < len(self.actions)
                    and self.actions[self.next_action].at_ms <= t
                ):
                    self._do_action(self.actions[self.next_action])
                    self.next_action += 1
                    progressed = True
                    continue
                for j, wake in enumerate(self.wakes):
                    if wake.fire_at_ms <= t:
                        self.wakes.pop(j)
                        self._fire_wake(wake, t)
                        progressed = True
                        break
            due: list[int] = []
            if self.next_action < len(self.actions):
                due.append(self.actions[self.next_action].at_ms)
            for flight in self.in_flight:
                due.append(flight.deliver_at_ms)
            for wake in self.wakes:
                due.append(wake.fire_at_ms)
            if not due:
                break
            t = max(t + 1, min(due))  # plain t+1 with the dead ticks skipped
        return self._report(t)

    def _report(self, final_t: int) -> SimReport:
        report = SimReport(
            scenario_name=self.scenario.name,
            initial_mode=self.scenario.initial_mode.value,
            params=dataclasses.asdict(self.params),
            network=dataclasses.asdict(self.scenario.network),
            final_time_ms=final_t,
            metrics=self.tally.metrics(),
            friend_transcript=tuple(
                transcript_entry_to_dict(e) for e in self.fstate.entries
            ),
            wearer_effect_log=tuple(self.effect_log),
            led_timeline=tuple(build_led_timeline(self.effect_log)),
            transcript_digest=friend_agent.transcript_digest(self.fstate),
        )
        return verify_report(report)


def reference_run(scenario: Scenario) -> SimReport:
    """Simulate a scenario with the naive tick interpreter."""
    return _ReferenceRun(scenario).run()
