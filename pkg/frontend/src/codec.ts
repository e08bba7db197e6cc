/**
 * Frame codec, kept byte-for-byte compatible with the relay.
 *
 * One frame per line: a JSON object with fields v, session_id, seq,
 * ts_ms, from, kind, body in that order, body keys sorted recursively,
 * no insignificant whitespace, UTF-8, terminated by a single '\n'.
 * The golden-frame tests pin this encoding against the relay's own.
 */

export const WIRE_VERSION = 1;

export type RoleName = "wearer" | "friend" | "relay";

export interface Frame {
  v: number;
  session_id: string;
  seq: number;
  ts_ms: number;
  from: RoleName;
  kind: string;
  body: Record<string, unknown>;
}

export class CodecError extends Error {}

const ROLES: ReadonlySet<string> = new Set(["wearer", "friend", "relay"]);
const FIELDS = ["v", "session_id", "seq", "ts_ms", "from", "kind", "body"];

function isInt(value: unknown): value is number {
  return typeof value === "number" && Number.isInteger(value);
}

/** Canonical JSON: object keys sorted at every depth. */
function canonical(value: unknown): string {
  if (value === null) return "null";
  if (typeof value === "string") return JSON.stringify(value);
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new CodecError("non-finite number in frame");
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonical).join(",") + "]";
  }
  if (typeof value === "object") {
    const rec = value as Record<string, unknown>;
    const parts = Object.keys(rec)
      .sort()
      .map((k) => JSON.stringify(k) + ":" + canonical(rec[k]));
    return "{" + parts.join(",") + "}";
  }
  throw new CodecError(`cannot encode a ${typeof value} in a frame`);
}

export function encodeFrame(frame: Frame): string {
  if (!isInt(frame.seq) || !isInt(frame.ts_ms) || !isInt(frame.v)) {
    throw new CodecError("seq, ts_ms and v must be integers");
  }
  return (
    `{"v":${frame.v}` +
    `,"session_id":${JSON.stringify(frame.session_id)}` +
    `,"seq":${frame.seq}` +
    `,"ts_ms":${frame.ts_ms}` +
    `,"from":${JSON.stringify(frame.from)}` +
    `,"kind":${JSON.stringify(frame.kind)}` +
    `,"body":${canonical(frame.body)}}\n`
  );
}

export function decodeFrame(line: string): Frame {
  const text = line.endsWith("\n") ? line.slice(0, -1) : line;
  if (!text) throw new CodecError("empty frame line");
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (exc) {
    throw new CodecError(`bad frame syntax: ${(exc as Error).message}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new CodecError("frame is not an object");
  }
  const rec = obj as Record<string, unknown>;
  const missing = FIELDS.filter((f) => !(f in rec));
  if (missing.length) throw new CodecError(`missing field(s): ${missing.join(", ")}`);
  const extra = Object.keys(rec).filter((k) => !FIELDS.includes(k));
  if (extra.length) throw new CodecError(`unknown field(s): ${extra.sort().join(", ")}`);
  if (!isInt(rec.v)) throw new CodecError("v must be an integer");
  if (rec.v !== WIRE_VERSION) throw new CodecError(`unsupported wire version ${rec.v}`);
  if (typeof rec.session_id !== "string") throw new CodecError("session_id must be a string");
  if (!isInt(rec.seq)) throw new CodecError("seq must be an integer");
  if (!isInt(rec.ts_ms)) throw new CodecError("ts_ms must be an integer");
  if (typeof rec.from !== "string" || !ROLES.has(rec.from)) {
    throw new CodecError(`unknown sender ${JSON.stringify(rec.from)}`);
  }
  if (typeof rec.kind !== "string" || !rec.kind) {
    throw new CodecError("kind must be a non-empty string");
  }
  if (typeof rec.body !== "object" || rec.body === null || Array.isArray(rec.body)) {
    throw new CodecError("body must be an object");
  }
  return {
    v: rec.v,
    session_id: rec.session_id,
    seq: rec.seq,
    ts_ms: rec.ts_ms,
    from: rec.from as RoleName,
    kind: rec.kind,
    body: rec.body as Record<string, unknown>,
  };
}

export function makeFrame(
  session_id: string,
  seq: number,
  ts_ms: number,
  from: RoleName,
  kind: string,
  body: Record<string, unknown>,
): Frame {
  return { v: WIRE_VERSION, session_id, seq, ts_ms, from, kind, body };
}
