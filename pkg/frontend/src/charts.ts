/** Stacked strip charts on a single canvas.
 *
 * Rendering decimates to one min/max pair per pixel column (display only;
 * the host recording keeps full fidelity).  NaN slots break the trace so
 * dropped batches show as gaps.
 */

import { PanelBuffers } from "./ring.js";

export interface Column {
  min: number;
  max: number;
  gap: boolean;
}

/** Min/max per pixel column over `samples`; NaN-only columns become gaps. */
export function decimateMinMax(samples: Float32Array, columns: number): Column[] {
  const out: Column[] = [];
  const n = samples.length;
  for (let c = 0; c < columns; c++) {
    const lo = Math.floor((c * n) / columns);
    const hi = Math.max(lo + 1, Math.floor(((c + 1) * n) / columns));
    let min = Infinity;
    let max = -Infinity;
    for (let i = lo; i < hi; i++) {
      const v = samples[i];
      if (Number.isNaN(v)) continue;
      if (v < min) min = v;
      if (v > max) max = v;
    }
    if (min === Infinity) {
      out.push({ min: 0, max: 0, gap: true });
    } else {
      out.push({ min, max, gap: false });
    }
  }
  return out;
}

/** Symmetric scale covering the data, floored so idle noise stays readable. */
export function channelScale(samples: Float32Array, floorMv = 0.05): number {
  let peak = 0;
  for (let i = 0; i < samples.length; i++) {
    const v = Math.abs(samples[i]);
    if (!Number.isNaN(v) && v > peak) peak = v;
  }
  return Math.max(peak * 1.1, floorMv);
}

export class StripCharts {
  private ctx: CanvasRenderingContext2D;

  constructor(
    private canvas: HTMLCanvasElement,
    private buffers: PanelBuffers,
    private windowSamples: number,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  render(): void {
    const { width, height } = this.canvas;
    const channels = this.buffers.rings.length;
    const laneH = height / channels;
    const ctx = this.ctx;
    ctx.clearRect(0, 0, width, height);
    ctx.font = "12px monospace";

    for (let ch = 0; ch < channels; ch++) {
      const top = ch * laneH;
      const mid = top + laneH / 2;
      const samples = this.buffers.rings[ch].latest(this.windowSamples);
      const scale = channelScale(samples);
      const columns = decimateMinMax(samples, width);

      ctx.strokeStyle = "#30363d";
      ctx.beginPath();
      ctx.moveTo(0, top + laneH);
      ctx.lineTo(width, top + laneH);
      ctx.stroke();
      ctx.strokeStyle = "#21262d";
      ctx.beginPath();
      ctx.moveTo(0, mid);
      ctx.lineTo(width, mid);
      ctx.stroke();

      ctx.strokeStyle = "#58a6ff";
      ctx.beginPath();
      let open = false;
      for (let x = 0; x < columns.length; x++) {
        const col = columns[x];
        if (col.gap) {
          open = false;
          continue;
        }
        const yMax = mid - (col.max / scale) * (laneH / 2 - 4);
        const yMin = mid - (col.min / scale) * (laneH / 2 - 4);
        if (!open) {
          ctx.moveTo(x, yMax);
          open = true;
        }
        ctx.lineTo(x, yMax);
        if (yMin !== yMax) ctx.lineTo(x, yMin);
      }
      ctx.stroke();

      ctx.fillStyle = "#8b949e";
      ctx.fillText(`ch${ch + 1}  ±${scale.toFixed(2)} mV`, 6, top + 14);
    }
  }
}
