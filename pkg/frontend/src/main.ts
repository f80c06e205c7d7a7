/** DOM wiring: connects the panel widgets to the bridge client. */

import { BridgeClient } from "./client.js";
import { StripCharts } from "./charts.js";
import { CHANNELS, commands } from "./protocol.js";
import { PanelBuffers, RING_CAPACITY } from "./ring.js";
import { PanelState } from "./state.js";

const REDRAW_MS = 50; // 20 redraws/s

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function init(): void {
  const canvas = el<HTMLCanvasElement>("charts");
  const banner = el<HTMLDivElement>("banner");
  const sessionLabel = el<HTMLSpanElement>("session");
  const samplesLabel = el<HTMLSpanElement>("samples");
  const savedLabel = el<HTMLSpanElement>("saved");
  const errorLabel = el<HTMLSpanElement>("error");
  const urlInput = el<HTMLInputElement>("url");
  const durationInput = el<HTMLInputElement>("duration");
  const notchInput = el<HTMLInputElement>("notch");
  const connectBtn = el<HTMLButtonElement>("connect");
  const startBtn = el<HTMLButtonElement>("start");
  const stopBtn = el<HTMLButtonElement>("stop");
  const saveBtn = el<HTMLButtonElement>("save");

  const buffers = new PanelBuffers(CHANNELS, RING_CAPACITY);
  const charts = new StripCharts(canvas, buffers, RING_CAPACITY);
  const state = new PanelState();
  let client: BridgeClient | null = null;

  function sendCommand(cmd: string, payload: string): void {
    if (!client || state.controlsLocked) return;
    if (client.send(payload)) state.commandSent(cmd);
  }

  state.onChange((snap) => {
    banner.textContent =
      snap.connection === "connected"
        ? `connected — ${snap.session}`
        : snap.connection === "connecting"
          ? "connecting…"
          : "disconnected — retrying";
    banner.className = snap.connection;
    sessionLabel.textContent = snap.session + (snap.reason ? ` (${snap.reason})` : "");
    samplesLabel.textContent = String(snap.samples);
    savedLabel.textContent = snap.savedPath ?? "—";
    errorLabel.textContent = snap.lastError ?? "";
    notchInput.checked = snap.notch;
    const locked = state.controlsLocked;
    startBtn.disabled = locked || snap.session === "acquiring";
    stopBtn.disabled = locked || snap.session !== "acquiring";
    saveBtn.disabled = locked;
    notchInput.disabled = locked;
    durationInput.disabled = snap.session === "acquiring";
  });

  connectBtn.addEventListener("click", () => {
    client?.close();
    client = new BridgeClient(urlInput.value, {
      onMessage: (msg) => {
        if (msg.type === "batch") {
          buffers.pushBatch(msg.start_index, msg.mv);
        } else {
          state.apply(msg);
        }
      },
      onStatus: (status) => state.setConnection(status),
    });
    client.connect();
  });

  startBtn.addEventListener("click", () => {
    const duration = Number(durationInput.value) || 6;
    buffers.clear();
    sendCommand("start", commands.start(duration));
  });
  stopBtn.addEventListener("click", () => sendCommand("stop", commands.stop()));
  saveBtn.addEventListener("click", () => sendCommand("save", commands.save()));
  notchInput.addEventListener("change", () =>
    sendCommand("set_notch", commands.setNotch(notchInput.checked)),
  );

  setInterval(() => charts.render(), REDRAW_MS);
  state.setConnection("disconnected");
}

init();
