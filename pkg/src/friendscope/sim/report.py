"""Simulation reports: plain-data output plus recomputable metrics.

A report is pure data (strings, ints, dicts) so two simulator
implementations can be compared byte-for-byte after JSON encoding.
Metrics inside a report come from the simulator's own live counters;
compute_metrics() re-derives them by folding over the report's logs,
and verify_report() cross-checks the two, so a report that lies about
its numbers is rejected.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .. import wearer as wearer_agent
from ..friend import Direction, MediaRef, TranscriptEntry
from ..protocol import (
    FriendCommand,
    IntegrityError,
    UNAVAILABLE_TEXT,
    parse_friend_text,
    render_notice,
)


@dataclass(frozen=True)
class Metrics:
    triggers_sent: int = 0
    triggers_coalesced: int = 0
    fulfilled_fast: int = 0
    fulfilled_auto: int = 0
    fulfilled_early: int = 0
    unavailable_count: int = 0
    media_delivered: int = 0
    latencies_ms: tuple[int, ...] = ()

    @property
    def latency_mean_ms(self) -> Optional[float]:
        if not self.latencies_ms:
            return None
        return sum(self.latencies_ms) / len(self.latencies_ms)

    @property
    def latency_max_ms(self) -> Optional[int]:
        if not self.latencies_ms:
            return None
        return max(self.latencies_ms)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["latencies_ms"] = list(self.latencies_ms)
        out["latency_mean_ms"] = self.latency_mean_ms
        out["latency_max_ms"] = self.latency_max_ms
        return out


@dataclass(frozen=True)
class SimReport:
    scenario_name: str
    initial_mode: str
    params: dict
    network: dict
    final_time_ms: int
    metrics: Metrics
    friend_transcript: tuple[dict, ...]
    wearer_effect_log: tuple[dict, ...]
    led_timeline: tuple[dict, ...]
    transcript_digest: str

    def to_dict(self) -> dict:
        return {
            "report_version": 1,
            "scenario_name": self.scenario_name,
            "initial_mode": self.initial_mode,
            "params": self.params,
            "network": self.network,
            "final_time_ms": self.final_time_ms,
            "metrics": self.metrics.to_dict(),
            "friend_transcript": list(self.friend_transcript),
            "wearer_effect_log": list(self.wearer_effect_log),
            "led_timeline": list(self.led_timeline),
            "transcript_digest": self.transcript_digest,
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(
            self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
        ).encode("utf-8")


# ---------------------------------------------------------------------------
# serialization of agent-level objects into report rows

def effect_to_dict(ts_ms: int, effect) -> dict:
    if isinstance(effect, wearer_agent.SendNotice):
        notice = effect.notice
        row = {
            "ts_ms": ts_ms,
            "effect": "send_notice",
            "notice": notice.kind.value,
            "text": render_notice(notice),
        }
        if notice.media_kind is not None:
            row["media_kind"] = notice.media_kind.value
        if notice.count is not None:
            row["count"] = notice.count
        if notice.mode is not None:
            row["mode"] = notice.mode.value
        return row
    if isinstance(effect, wearer_agent.SendMedia):
        media = effect.media
        return {
            "ts_ms": ts_ms,
            "effect": "send_media",
            "media_id": media.id,
            "media_kind": media.kind.value,
            "digest": media.payload_digest,
            "size_bytes": media.size_bytes,
            "trigger_id": media.trigger_id,
            "capture_start_ms": media.capture_start_ms,
            "capture_end_ms": media.capture_end_ms,
        }
    if isinstance(effect, wearer_agent.SetLed):
        signal = effect.signal
        return {
            "ts_ms": ts_ms,
            "effect": "set_led",
            "color": signal.color.value,
            "pattern": signal.pattern.value,
            "cause": signal.cause.value,
            "start_ms": signal.start_ms,
            "end_ms": signal.end_ms,
        }
    if isinstance(effect, wearer_agent.ClearLed):
        return {"ts_ms": ts_ms, "effect": "clear_led"}
    if isinstance(effect, wearer_agent.ArmTimer):
        return {
            "ts_ms": ts_ms,
            "effect": "arm_timer",
            "timer": effect.kind.value,
            "key": effect.key,
            "fire_at_ms": effect.fire_at_ms,
        }
    if isinstance(effect, wearer_agent.Log):
        return {"ts_ms": ts_ms, "effect": "log", "entry": dict(effect.entry)}
    raise TypeError(f"unknown effect {effect!r}")


def host_log(ts_ms: int, entry: dict) -> dict:
    """A host-authored log row in the same shape as agent Log effects."""
    return {"ts_ms": ts_ms, "effect": "log", "entry": dict(entry)}


def transcript_entry_to_dict(entry: TranscriptEntry) -> dict:
    if isinstance(entry.content, MediaRef):
        return {
            "ts_ms": entry.ts_ms,
            "direction": entry.direction.value,
            "media_kind": entry.content.kind.value,
            "digest": entry.content.digest,
            "size_bytes": entry.content.size_bytes,
        }
    return {
        "ts_ms": entry.ts_ms,
        "direction": entry.direction.value,
        "text": entry.content,
    }


# ---------------------------------------------------------------------------
# folds over report rows

def build_led_timeline(effect_log: Iterable[dict]) -> list[dict]:
    """Resolve set/clear effects into non-overlapping LED intervals.

    A newer signal clips the one it replaces; a clear truncates. Zero
    length intervals (replaced the instant they started) are dropped.
    The final interval keeps its natural end.
    """
    timeline: list[dict] = []
    current: Optional[dict] = None

    def close(end_ms: int) -> None:
        nonlocal current
        if current is not None:
            if end_ms > current["start_ms"]:
                timeline.append({**current, "end_ms": end_ms})
            current = None

    for row in effect_log:
        if row["effect"] == "set_led":
            close(min(current["end_ms"], row["start_ms"]) if current else 0)
            current = {
                "color": row["color"],
                "pattern": row["pattern"],
                "cause": row["cause"],
                "start_ms": row["start_ms"],
                "end_ms": row["end_ms"],
            }
        elif row["effect"] == "clear_led":
            close(min(current["end_ms"], row["ts_ms"]) if current else 0)
    if current is not None:
        timeline.append(current)
    return timeline


def compute_metrics(effect_log: Sequence[dict], transcript: Sequence[dict]) -> Metrics:
    """Re-derive the metrics purely from the report's own logs."""
    triggers_sent = sum(
        1
        for e in transcript
        if e["direction"] == Direction.SENT.value
        and parse_friend_text(e["text"]) is FriendCommand.TRIGGER
    )
    coalesced = fast = auto = early = 0
    sent_at_by_trigger: dict[str, int] = {}
    fast_sent_at: dict[str, int] = {}
    media_origin: dict[str, tuple[str, Optional[str]]] = {}
    for row in effect_log:
        if row["effect"] == "log":
            entry = row["entry"]
            event = entry.get("event")
            if event == "trigger_created":
                sent_at_by_trigger[entry["trigger"]] = entry["sent_at_ms"]
            elif event == "trigger_coalesced":
                coalesced += 1
            elif event == "fast_fulfillment":
                fast += 1
                fast_sent_at[entry["media"]] = entry["sent_at_ms"]
            elif event in ("auto_fulfillment", "auto_adopted_capture"):
                auto += 1
            elif event in ("early_fulfillment", "capture_end_fulfillment"):
                early += 1
        elif row["effect"] == "send_media":
            media_origin[row["digest"]] = (row["media_id"], row["trigger_id"])
    unavailable = sum(
        1
        for e in transcript
        if e["direction"] == Direction.RECEIVED.value
        and e.get("text") == UNAVAILABLE_TEXT
    )
    media_delivered = 0
    latencies: list[int] = []
    for e in transcript:
        if e["direction"] == Direction.RECEIVED.value and "digest" in e:
            media_delivered += 1
            media_id, trigger_id = media_origin.get(e["digest"], (None, None))
            base = fast_sent_at.get(media_id)
            if base is None and trigger_id is not None:
                base = sent_at_by_trigger.get(trigger_id)
            if base is not None:
                latencies.append(e["ts_ms"] - base)
    return Metrics(
        triggers_sent=triggers_sent,
        triggers_coalesced=coalesced,
        fulfilled_fast=fast,
        fulfilled_auto=auto,
        fulfilled_early=early,
        unavailable_count=unavailable,
        media_delivered=media_delivered,
        latencies_ms=tuple(latencies),
    )


def verify_report(report: SimReport) -> SimReport:
    """Cross-check live counters against a fold over the logs."""
    recomputed = compute_metrics(report.wearer_effect_log, report.friend_transcript)
    if recomputed != report.metrics:
        raise IntegrityError(
            "metrics disagree with logs: "
            f"live={report.metrics.to_dict()} recomputed={recomputed.to_dict()}"
        )
    rebuilt = build_led_timeline(report.wearer_effect_log)
    if tuple(rebuilt) != tuple(report.led_timeline):
        raise IntegrityError("led timeline disagrees with effect log")
    return report


# ---------------------------------------------------------------------------
# human-readable rendering (used by the CLI's table format)

def render_table(report: SimReport) -> str:
    m = report.metrics
    mean = f"{m.latency_mean_ms:.1f}" if m.latency_mean_ms is not None else "-"
    peak = str(m.latency_max_ms) if m.latency_max_ms is not None else "-"
    lines = [
        f"scenario: {report.scenario_name}",
        f"initial mode: {report.initial_mode}",
        f"simulated time: {report.final_time_ms} ms",
        "",
        "metric                     value",
        "-------------------------  -----",
        f"triggers sent              {m.triggers_sent}",
        f"triggers coalesced         {m.triggers_coalesced}",
        f"fulfilled from hold queue  {m.fulfilled_fast}",
        f"fulfilled by auto approve  {m.fulfilled_auto}",
        f"fulfilled early by wearer  {m.fulfilled_early}",
        f"unavailable responses      {m.unavailable_count}",
        f"media delivered            {m.media_delivered}",
        f"latency mean / max (ms)    {mean} / {peak}",
        "",
        "friend transcript:",
    ]
    for e in report.friend_transcript:
        arrow = "->" if e["direction"] == "sent" else "<-"
        if "digest" in e:
            content = f"[{e['media_kind']} {e['size_bytes']}B {e['digest'][:8]}…]"
        else:
            content = e["text"]
        lines.append(f"  {e['ts_ms']:>8} {arrow} {content}")
    lines.append("")
    lines.append("led timeline:")
    if not report.led_timeline:
        lines.append("  (dark)")
    for iv in report.led_timeline:
        lines.append(
            f"  {iv['start_ms']:>8}..{iv['end_ms']:<8} {iv['color']} {iv['pattern']}"
            f" ({iv['cause']})"
        )
    return "\n".join(lines) + "\n"
