/** Panel state: session mirror plus command gating.
 *
 * UI state only moves on bridge messages; a control that sent a command is
 * locked (awaitingAck) until its ack or error reply lands.
 */

import { AckMessage, BridgeMessage, ErrorMessage, SessionStateName } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface PanelSnapshot {
  connection: ConnectionStatus;
  session: SessionStateName;
  notch: boolean;
  durationS: number;
  samples: number;
  reason: string | null;
  awaitingAck: string | null;
  lastError: string | null;
  savedPath: string | null;
}

export class PanelState {
  private snap: PanelSnapshot = {
    connection: "disconnected",
    session: "idle",
    notch: false,
    durationS: 6,
    samples: 0,
    reason: null,
    awaitingAck: null,
    lastError: null,
    savedPath: null,
  };
  private listeners: Array<(s: PanelSnapshot) => void> = [];

  get snapshot(): PanelSnapshot {
    return { ...this.snap };
  }

  onChange(fn: (s: PanelSnapshot) => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    const copy = this.snapshot;
    for (const fn of this.listeners) fn(copy);
  }

  setConnection(status: ConnectionStatus): void {
    this.snap.connection = status;
    if (status !== "connected") this.snap.awaitingAck = null;
    this.emit();
  }

  /** A command went out; lock its control until the reply arrives. */
  commandSent(cmd: string): void {
    this.snap.awaitingAck = cmd;
    this.snap.lastError = null;
    this.emit();
  }

  get controlsLocked(): boolean {
    return this.snap.connection !== "connected" || this.snap.awaitingAck !== null;
  }

  apply(msg: BridgeMessage): void {
    switch (msg.type) {
      case "state":
        this.snap.session = msg.state;
        this.snap.notch = msg.notch;
        this.snap.durationS = msg.duration_s;
        this.snap.samples = msg.samples;
        this.snap.reason = msg.reason;
        break;
      case "ack":
        this.applyReply(msg.cmd);
        if (msg.cmd === "save" && msg.path) this.snap.savedPath = msg.path;
        if (msg.cmd === "status") this.applyStatus(msg);
        break;
      case "error":
        this.applyReply(msg.cmd);
        this.snap.lastError = msg.message;
        break;
      case "batch":
        return; // buffers handle samples; no state change, no emit
    }
    this.emit();
  }

  private applyReply(cmd: string | null): void {
    if (this.snap.awaitingAck !== null && (cmd === null || cmd === this.snap.awaitingAck)) {
      this.snap.awaitingAck = null;
    }
  }

  private applyStatus(msg: AckMessage): void {
    if (msg.state) this.snap.session = msg.state;
  }
}

export function describeError(msg: ErrorMessage): string {
  return msg.cmd ? `${msg.cmd}: ${msg.message}` : msg.message;
}
