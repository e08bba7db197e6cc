import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { CodecError, decodeFrame, encodeFrame, makeFrame, type Frame } from "../src/codec.js";

interface Golden {
  frame: Frame;
  line: string;
}

const goldens: Golden[] = JSON.parse(
  readFileSync(fileURLToPath(new URL("./fixtures/golden_frames.json", import.meta.url)), "utf-8"),
);

describe("golden frames", () => {
  it("covers a useful spread of kinds", () => {
    const kinds = new Set(goldens.map((g) => g.frame.kind));
    for (const kind of ["cmd", "notice", "media", "led", "led_clear", "attach", "error"]) {
      expect(kinds).toContain(kind);
    }
    expect(goldens.length).toBeGreaterThan(20);
  });

  it("encodes every golden frame to the exact relay bytes", () => {
    const enc = new TextEncoder();
    for (const { frame, line } of goldens) {
      const ours = encodeFrame(frame);
      expect(ours).toBe(line);
      expect(enc.encode(ours)).toEqual(enc.encode(line));
    }
  });

  it("round-trips every golden line through decode and encode", () => {
    for (const { line } of goldens) {
      expect(encodeFrame(decodeFrame(line))).toBe(line);
    }
  });

  it("decodes fields faithfully", () => {
    for (const { frame, line } of goldens) {
      const decoded = decodeFrame(line);
      expect(decoded).toEqual(frame);
    }
  });
});

describe("encode", () => {
  it("sorts body keys at every depth", () => {
    const frame = makeFrame("s", 1, 2, "relay", "x", {
      b: 1,
      a: { z: true, m: [{ q: 1, p: 2 }] },
    });
    expect(encodeFrame(frame)).toBe(
      '{"v":1,"session_id":"s","seq":1,"ts_ms":2,"from":"relay","kind":"x",' +
        '"body":{"a":{"m":[{"p":2,"q":1}],"z":true},"b":1}}\n',
    );
  });

  it("keeps non-ascii text unescaped", () => {
    const frame = makeFrame("s", 1, 2, "wearer", "notice", { text: "café — ☕" });
    expect(encodeFrame(frame)).toContain("café — ☕");
  });

  it("rejects non-integer timestamps", () => {
    const frame = makeFrame("s", 1, 2.5, "wearer", "x", {});
    expect(() => encodeFrame(frame)).toThrow(CodecError);
  });
});

describe("decode", () => {
  const good = '{"v":1,"session_id":"s","seq":1,"ts_ms":2,"from":"relay","kind":"x","body":{}}';

  it("accepts a line with or without the trailing newline", () => {
    expect(decodeFrame(good).kind).toBe("x");
    expect(decodeFrame(good + "\n").kind).toBe("x");
  });

  const bad: Array<[string, string]> = [
    ["", "empty"],
    ["not json", "syntax"],
    ["[1,2]", "not an object"],
    ['{"v":1}', "missing field"],
    [good.replace('"v":1', '"v":9'), "wire version"],
    [good.replace('"from":"relay"', '"from":"spy"'), "unknown sender"],
    [good.replace('"body":{}', '"body":[]'), "body must be an object"],
    [good.slice(0, -1) + ',"extra":1}', "unknown field"],
    [good.replace('"seq":1', '"seq":"1"'), "seq must be an integer"],
  ];

  it.each(bad)("rejects %s", (line) => {
    expect(() => decodeFrame(line)).toThrow(CodecError);
  });
});
