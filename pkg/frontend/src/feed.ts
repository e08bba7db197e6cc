/**
 * Friend-side feed state: a pure reducer over sent texts and incoming
 * frames, mirroring the transcript rules the relay's friend endpoint
 * uses (awaiting window opens on 'T', closes on media or an
 * unavailable/paused notice). Countdown notices collapse into a single
 * row that updates in place instead of stacking.
 */

import type { Frame } from "./codec.js";

export type FeedRow =
  | { type: "sent"; ts_ms: number; text: string }
  | { type: "note"; ts_ms: number; notice: string; text: string }
  | { type: "countdown"; ts_ms: number; count: number }
  | {
      type: "media";
      ts_ms: number;
      media_kind: string;
      digest: string;
      size_bytes: number;
      latency_ms: number | null;
    }
  | { type: "raw"; ts_ms: number; kind: string; summary: string };

export interface FeedState {
  sessionId: string | null;
  rows: FeedRow[];
  awaitingSinceMs: number | null;
  lastTriggerSentMs: number | null;
  mode: string | null;
  ended: boolean;
}

export function newFeed(sessionId: string | null = null): FeedState {
  return {
    sessionId,
    rows: [],
    awaitingSinceMs: null,
    lastTriggerSentMs: null,
    mode: null,
    ended: false,
  };
}

/** Single-letter T/U/D (trimmed, any case) are commands; else chat. */
export function commandFor(text: string): "T" | "U" | "D" | null {
  const t = text.trim().toUpperCase();
  return t === "T" || t === "U" || t === "D" ? t : null;
}

/** Record a message this endpoint sent. */
export function recordSent(state: FeedState, text: string, ts_ms: number): void {
  state.rows.push({ type: "sent", ts_ms, text });
  if (commandFor(text) === "T") {
    if (state.awaitingSinceMs === null) state.awaitingSinceMs = ts_ms;
    state.lastTriggerSentMs = ts_ms;
  }
}

/**
 * Fold one incoming frame into the feed. Kinds the feed does not
 * understand surface as raw rows rather than vanishing.
 */
export function applyFrame(state: FeedState, frame: Frame): void {
  if (state.sessionId === null) state.sessionId = frame.session_id;
  if (frame.kind === "notice") {
    const notice = String(frame.body.notice ?? "");
    const text = String(frame.body.text ?? "");
    if (notice === "countdown") {
      const count = Number(frame.body.count ?? 0);
      const last = state.rows[state.rows.length - 1];
      if (last !== undefined && last.type === "countdown") {
        last.count = count;
        last.ts_ms = frame.ts_ms;
      } else {
        state.rows.push({ type: "countdown", ts_ms: frame.ts_ms, count });
      }
      return;
    }
    state.rows.push({ type: "note", ts_ms: frame.ts_ms, notice, text });
    if (notice === "unavailable" || notice === "triggers_paused") {
      state.awaitingSinceMs = null;
    }
    if (notice === "mode_change") state.mode = String(frame.body.mode ?? "");
    if (notice === "session_ended") state.ended = true;
    return;
  }
  if (frame.kind === "media") {
    const latency =
      state.lastTriggerSentMs === null ? null : frame.ts_ms - state.lastTriggerSentMs;
    state.rows.push({
      type: "media",
      ts_ms: frame.ts_ms,
      media_kind: String(frame.body.media_kind ?? ""),
      digest: String(frame.body.digest ?? ""),
      size_bytes: Number(frame.body.size_bytes ?? 0),
      latency_ms: latency,
    });
    state.awaitingSinceMs = null;
    return;
  }
  state.rows.push({
    type: "raw",
    ts_ms: frame.ts_ms,
    kind: frame.kind,
    summary: JSON.stringify(frame.body),
  });
}

/** Milliseconds the current trigger has gone unanswered, or null. */
export function awaitingFor(state: FeedState, now_ms: number): number | null {
  return state.awaitingSinceMs === null ? null : now_ms - state.awaitingSinceMs;
}
