/** DOM wiring for the two-panel console (friend feed, wearer device). */

import { makeFrame, type Frame, type RoleName } from "./codec.js";
import { RelayConnection } from "./connection.js";
import { applyFrame, awaitingFor, newFeed, recordSent, type FeedRow } from "./feed.js";
import { applyLed, ledIsLit, type LedView } from "./led.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const joinForm = el<HTMLFormElement>("join-form");
const urlInput = el<HTMLInputElement>("relay-url");
const roleSelect = el<HTMLSelectElement>("role");
const sessionInput = el<HTMLInputElement>("session-id");
const tokenInput = el<HTMLInputElement>("token");
const createBox = el<HTMLInputElement>("create-session");
const modeSelect = el<HTMLSelectElement>("mode");
const statusLine = el<HTMLElement>("status");
const friendPanel = el<HTMLElement>("friend-panel");
const wearerPanel = el<HTMLElement>("wearer-panel");
const feedList = el<HTMLUListElement>("feed");
const pendingBadge = el<HTMLElement>("pending");
const chatForm = el<HTMLFormElement>("chat-form");
const chatInput = el<HTMLInputElement>("chat-text");
const ledDot = el<HTMLElement>("led");
const ledLabel = el<HTMLElement>("led-label");
const triggerButton = el<HTMLButtonElement>("btn-T");
const captureButton = el<HTMLButtonElement>("capture");
const swipeButton = el<HTMLButtonElement>("swipe");
const wearerMode = el<HTMLSelectElement>("wearer-mode");
const endButton = el<HTMLButtonElement>("end-session");

const HOLD_THRESHOLD_MS = 600;

urlInput.value ||= `ws://${location.host}/ws`;

let conn: RelayConnection | null = null;
let role: RoleName = "friend";
let sessionId = "";
let token = "";
let seq = 0;
let baseMs = 0;
let attachedAt = 0;
let feed = newFeed();
let led: LedView | null = null;

function nowMs(): number {
  return attachedAt === 0 ? 0 : baseMs + Math.round(performance.now() - attachedAt);
}

function setStatus(text: string): void {
  statusLine.textContent = text;
}

function sendFrame(kind: string, body: Record<string, unknown>): void {
  seq += 1;
  conn?.send(makeFrame(sessionId, seq, nowMs(), role, kind, body));
}

function rowNode(row: FeedRow): HTMLLIElement {
  const li = document.createElement("li");
  li.className = `row ${row.type}`;
  const when = document.createElement("span");
  when.className = "ts";
  when.textContent = `${row.ts_ms}`;
  li.appendChild(when);
  const body = document.createElement("span");
  if (row.type === "sent") {
    body.textContent = row.text;
  } else if (row.type === "note") {
    body.textContent = row.text;
  } else if (row.type === "countdown") {
    body.textContent = `${row.count}..`;
  } else if (row.type === "media") {
    body.textContent = `${row.media_kind} ${row.size_bytes} bytes ${row.digest.slice(0, 8)}`;
    if (row.latency_ms !== null) {
      const badge = document.createElement("span");
      badge.className = "latency";
      badge.textContent = `${row.latency_ms} ms`;
      body.appendChild(badge);
    }
  } else {
    body.textContent = `${row.kind} ${row.summary}`;
  }
  li.appendChild(body);
  return li;
}

function renderFeed(): void {
  feedList.replaceChildren(...feed.rows.map(rowNode));
  feedList.scrollTop = feedList.scrollHeight;
}

function renderLed(): void {
  const now = nowMs();
  if (ledIsLit(led, now)) {
    const view = led as LedView;
    const total = view.end_ms - view.start_ms;
    const remaining = view.end_ms - now;
    ledDot.className = `led on ${view.color} ${view.pattern}`;
    ledDot.style.setProperty("--frac", `${total > 0 ? remaining / total : 0}`);
    ledLabel.textContent =
      `${view.color} ${view.pattern} (${view.cause}) ${(remaining / 1000).toFixed(1)} s`;
  } else {
    ledDot.className = "led off";
    ledDot.style.removeProperty("--frac");
    ledLabel.textContent = "off";
  }
}

function triggerPending(): boolean {
  return !feed.ended && awaitingFor(feed, nowMs()) !== null;
}

function renderPending(): void {
  const waited = awaitingFor(feed, nowMs());
  if (waited === null || feed.ended) {
    pendingBadge.hidden = true;
  } else {
    pendingBadge.hidden = false;
    pendingBadge.textContent = `trigger pending ${(waited / 1000).toFixed(1)} s`;
  }
  const pending = triggerPending();
  triggerButton.disabled = pending;
  triggerButton.title = pending ? "request already pending" : "";
}

setInterval(() => {
  renderPending();
  if (role === "wearer") renderLed();
}, 250);

function onFrame(frame: Frame): void {
  switch (frame.kind) {
    case "session_created":
      sessionId = String(frame.body.session_id ?? "");
      token = String(frame.body.token ?? "");
      sessionInput.value = sessionId;
      tokenInput.value = token;
      setStatus(`session ${sessionId} created`);
      sendAttach();
      return;
    case "attached":
      baseMs = Number(frame.body.now_ms ?? 0);
      attachedAt = performance.now();
      setStatus(`attached as ${role} at t=${baseMs} ms`);
      return;
    case "error":
      setStatus(`relay error: ${frame.body.code} ${frame.body.message ?? ""}`);
      return;
    case "led":
    case "led_clear":
      led = applyLed(led, frame);
      renderLed();
      return;
    default:
      applyFrame(feed, frame);
      renderFeed();
      renderPending();
  }
}

function sendAttach(): void {
  conn?.send(makeFrame(sessionId, 0, nowMs(), role, "attach", { token }));
}

function onOpen(): void {
  if (role === "wearer" && createBox.checked && !sessionId) {
    conn?.send(
      makeFrame("", 0, 0, "wearer", "create_session", {
        friend_id: "console",
        mode: modeSelect.value,
      }),
    );
    return;
  }
  sendAttach();
}

joinForm.addEventListener("submit", (event) => {
  event.preventDefault();
  conn?.close();
  role = roleSelect.value === "wearer" ? "wearer" : "friend";
  sessionId = sessionInput.value.trim();
  token = tokenInput.value.trim();
  seq = 0;
  feed = newFeed(sessionId || null);
  led = null;
  renderFeed();
  friendPanel.hidden = role !== "friend";
  wearerPanel.hidden = role !== "wearer";
  conn = new RelayConnection(urlInput.value.trim(), {
    onFrame,
    onOpen,
    onStatus: setStatus,
  });
});

// friend side -----------------------------------------------------------

function sendText(text: string): void {
  if (!text || role !== "friend") return;
  const ts = nowMs();
  sendFrame("cmd", { text });
  recordSent(feed, text, ts);
  renderFeed();
  renderPending();
}

chatForm.addEventListener("submit", (event) => {
  event.preventDefault();
  sendText(chatInput.value);
  chatInput.value = "";
});

triggerButton.addEventListener("click", () => {
  if (triggerPending()) {
    setStatus("request already pending");
    return;
  }
  sendText("T");
});
for (const letter of ["U", "D"] as const) {
  el<HTMLButtonElement>(`btn-${letter}`).addEventListener("click", () => sendText(letter));
}

// wearer side -----------------------------------------------------------

let pressStarted = 0;

captureButton.addEventListener("pointerdown", () => {
  pressStarted = performance.now();
});

captureButton.addEventListener("pointerup", () => {
  if (pressStarted === 0) return;
  const held = performance.now() - pressStarted;
  pressStarted = 0;
  const gesture = held >= HOLD_THRESHOLD_MS ? "press_hold" : "press";
  sendFrame("gesture", { gesture });
  setStatus(`sent ${gesture}`);
});

captureButton.addEventListener("pointerleave", () => {
  pressStarted = 0;
});

swipeButton.addEventListener("click", () => {
  sendFrame("gesture", { gesture: "swipe_back" });
  setStatus("sent swipe_back");
});

wearerMode.addEventListener("change", () => {
  sendFrame("set_mode", { mode: wearerMode.value });
});

endButton.addEventListener("click", () => {
  sendFrame("end", {});
  setStatus("session end requested");
});
