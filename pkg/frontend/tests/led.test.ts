import { describe, expect, it } from "vitest";

import { makeFrame } from "../src/codec.js";
import { applyLed, ledIsLit, type LedView } from "../src/led.js";

function ledFrame(color: string, pattern: string, start: number, end: number, cause: string) {
  return makeFrame("s1", 1, start, "relay", "led", {
    color,
    pattern,
    start_ms: start,
    end_ms: end,
    cause,
  });
}

describe("led view", () => {
  it("follows set and clear frames", () => {
    let view: LedView | null = null;
    view = applyLed(view, ledFrame("green", "flashing", 0, 10000, "trigger_pending"));
    expect(view).toEqual({
      color: "green",
      pattern: "flashing",
      cause: "trigger_pending",
      start_ms: 0,
      end_ms: 10000,
    });
    view = applyLed(view, ledFrame("white", "solid", 4000, 5000, "capturing"));
    expect(view?.color).toBe("white");
    view = applyLed(view, makeFrame("s1", 2, 5000, "relay", "led_clear", {}));
    expect(view).toBeNull();
  });

  it("leaves the view alone for unrelated frames", () => {
    const lit = applyLed(null, ledFrame("blue", "flashing", 0, 2000, "thumbs_up"));
    const after = applyLed(lit, makeFrame("s1", 3, 100, "wearer", "notice", { text: "x" }));
    expect(after).toBe(lit);
  });

  it("reports a signal as off once its end time passes", () => {
    const view = applyLed(null, ledFrame("white", "flashing", 0, 1000, "sent"));
    expect(ledIsLit(view, 999)).toBe(true);
    expect(ledIsLit(view, 1000)).toBe(false);
    expect(ledIsLit(null, 0)).toBe(false);
  });
});
