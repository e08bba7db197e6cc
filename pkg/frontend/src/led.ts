/** Wearer-side ring light, driven by led/led_clear frames. */

import type { Frame } from "./codec.js";

export interface LedView {
  color: string;
  pattern: string;
  cause: string;
  start_ms: number;
  end_ms: number;
}

/** Returns the new view, or the old one for unrelated frames. */
export function applyLed(current: LedView | null, frame: Frame): LedView | null {
  if (frame.kind === "led_clear") return null;
  if (frame.kind !== "led") return current;
  return {
    color: String(frame.body.color ?? ""),
    pattern: String(frame.body.pattern ?? ""),
    cause: String(frame.body.cause ?? ""),
    start_ms: Number(frame.body.start_ms ?? 0),
    end_ms: Number(frame.body.end_ms ?? 0),
  };
}

/** A signal past its end time shows as off even without a clear frame. */
export function ledIsLit(view: LedView | null, now_ms: number): boolean {
  return view !== null && now_ms < view.end_ms;
}
