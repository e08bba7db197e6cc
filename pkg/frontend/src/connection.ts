/**
 * WebSocket connection to the relay's /ws endpoint with automatic
 * reconnection. Each WebSocket text message carries exactly one frame
 * line; attach handshakes are the caller's job (re-run via onOpen).
 */

import { CodecError, decodeFrame, encodeFrame, type Frame } from "./codec.js";

export interface ConnectionHandlers {
  onFrame: (frame: Frame) => void;
  onOpen?: () => void;
  onStatus?: (status: string) => void;
}

const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 8000;

export class RelayConnection {
  private socket: WebSocket | null = null;
  private backoffMs = BACKOFF_START_MS;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: ConnectionHandlers,
  ) {
    this.open();
  }

  private status(text: string): void {
    this.handlers.onStatus?.(text);
  }

  private open(): void {
    if (this.closed) return;
    this.status("connecting");
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.status("connected");
      this.handlers.onOpen?.();
    };
    socket.onmessage = (event: MessageEvent) => {
      if (typeof event.data !== "string") return;
      let frame: Frame;
      try {
        frame = decodeFrame(event.data);
      } catch (exc) {
        if (exc instanceof CodecError) return;
        throw exc;
      }
      this.handlers.onFrame(frame);
    };
    socket.onclose = () => {
      this.socket = null;
      if (this.closed) return;
      this.status(`reconnecting in ${this.backoffMs} ms`);
      this.timer = setTimeout(() => this.open(), this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
    };
    socket.onerror = () => {
      // onclose follows and handles the retry
    };
  }

  /** True if the frame was handed to an open socket. */
  send(frame: Frame): boolean {
    if (this.socket === null || this.socket.readyState !== WebSocket.OPEN) {
      this.status("not connected; message dropped");
      return false;
    }
    this.socket.send(encodeFrame(frame));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
    this.status("closed");
  }
}
