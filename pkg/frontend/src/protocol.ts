/** Bridge protocol: JSON messages over a WebSocket, one object per message. */

export type SessionStateName = "idle" | "acquiring" | "stopped";

export interface StateMessage {
  type: "state";
  state: SessionStateName;
  duration_s: number;
  reason: string | null;
  notch: boolean;
  samples: number;
}

export interface AckMessage {
  type: "ack";
  cmd: string;
  // save acks carry the written file
  path?: string;
  samples?: number;
  on?: boolean;
  state?: SessionStateName;
}

export interface ErrorMessage {
  type: "error";
  cmd: string | null;
  message: string;
}

export interface BatchMessage {
  type: "batch";
  start_index: number;
  /** rows of 8 channel values in millivolts */
  mv: number[][];
}

export type BridgeMessage = StateMessage | AckMessage | ErrorMessage | BatchMessage;

export const CHANNELS = 8;

export function parseMessage(text: string): BridgeMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "state":
      if (!isSessionState(msg.state) || typeof msg.duration_s !== "number") return null;
      return msg as unknown as StateMessage;
    case "ack":
      if (typeof msg.cmd !== "string") return null;
      return msg as unknown as AckMessage;
    case "error":
      if (typeof msg.message !== "string") return null;
      return msg as unknown as ErrorMessage;
    case "batch":
      if (typeof msg.start_index !== "number" || !isMvRows(msg.mv)) return null;
      return msg as unknown as BatchMessage;
    default:
      return null;
  }
}

function isSessionState(x: unknown): x is SessionStateName {
  return x === "idle" || x === "acquiring" || x === "stopped";
}

function isMvRows(x: unknown): x is number[][] {
  if (!Array.isArray(x)) return false;
  return x.every(
    (row) =>
      Array.isArray(row) &&
      row.length === CHANNELS &&
      row.every((v) => typeof v === "number"),
  );
}

export const commands = {
  start: (durationS: number) => JSON.stringify({ cmd: "start", duration_s: durationS }),
  stop: () => JSON.stringify({ cmd: "stop" }),
  setNotch: (on: boolean) => JSON.stringify({ cmd: "set_notch", on }),
  save: (path?: string) => JSON.stringify(path ? { cmd: "save", path } : { cmd: "save" }),
  status: () => JSON.stringify({ cmd: "status" }),
};
