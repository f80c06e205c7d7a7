/** Bridge client: WebSocket with auto-reconnect and parsed dispatch. */

import { Backoff } from "./backoff.js";
import { BridgeMessage, parseMessage } from "./protocol.js";

/** The subset of WebSocket the client needs; injectable for tests. */
export interface SocketLike {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  onMessage: (msg: BridgeMessage) => void;
  onStatus: (status: "connecting" | "connected" | "disconnected") => void;
}

export class BridgeClient {
  private socket: SocketLike | null = null;
  private backoff = new Backoff();
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private events: ClientEvents,
    private factory: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike,
    private schedule: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = setTimeout,
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    this.events.onStatus("connecting");
    let socket: SocketLike;
    try {
      socket = this.factory(this.url);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.backoff.reset();
      this.events.onStatus("connected");
    };
    socket.onclose = () => {
      this.socket = null;
      if (!this.closed) this.scheduleRetry();
    };
    socket.onmessage = (event) => {
      if (typeof event.data !== "string") return;
      const msg = parseMessage(event.data);
      if (msg) this.events.onMessage(msg);
    };
  }

  private scheduleRetry(): void {
    this.events.onStatus("disconnected");
    const delay = this.backoff.nextDelayMs();
    this.retryTimer = this.schedule(() => {
      if (!this.closed) this.open();
    }, delay);
  }

  send(data: string): boolean {
    if (!this.socket) return false;
    try {
      this.socket.send(data);
      return true;
    } catch {
      return false;
    }
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.socket?.close();
    this.socket = null;
  }
}
