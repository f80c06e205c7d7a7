/** Fixed-capacity sample history per channel.
 *
 * Slots advance with the stream's absolute sample index, so a dropped batch
 * leaves NaN slots (rendered as chart gaps) instead of shifting later
 * samples earlier -- the panel never invents values.
 */

export const RING_CAPACITY = 5000; // 5 s at 1000 SPS

export class ChannelRing {
  readonly capacity: number;
  private data: Float32Array;
  private head = 0; // slot where the next sample lands
  private nextIndex: number | null = null; // expected absolute sample index
  private count = 0; // total slots ever advanced, saturates at capacity

  constructor(capacity: number = RING_CAPACITY) {
    this.capacity = capacity;
    this.data = new Float32Array(capacity).fill(NaN);
  }

  /** Append one sample carried by absolute stream index. */
  push(index: number, value: number): void {
    if (this.nextIndex !== null && index < this.nextIndex) {
      // stream restarted (new session counts from 0 again)
      this.clear();
    }
    if (this.nextIndex !== null) {
      let gap = index - this.nextIndex;
      if (gap >= this.capacity) {
        this.data.fill(NaN);
        gap = 0;
        this.head = 0;
        this.count = this.capacity;
      }
      for (let i = 0; i < gap; i++) this.advance(NaN);
    }
    this.advance(value);
    this.nextIndex = index + 1;
  }

  private advance(value: number): void {
    this.data[this.head] = value;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count++;
  }

  clear(): void {
    this.data.fill(NaN);
    this.head = 0;
    this.count = 0;
    this.nextIndex = null;
  }

  get filled(): number {
    return this.count;
  }

  /** Last `n` slots, oldest first; missing history padded with NaN. */
  latest(n: number): Float32Array {
    const out = new Float32Array(n).fill(NaN);
    const take = Math.min(n, this.count);
    for (let i = 0; i < take; i++) {
      const slot = (this.head - 1 - i + 2 * this.capacity) % this.capacity;
      out[n - 1 - i] = this.data[slot];
    }
    return out;
  }
}

/** Ring per channel, fed by bridge batches. */
export class PanelBuffers {
  readonly rings: ChannelRing[];

  constructor(channels: number, capacity: number = RING_CAPACITY) {
    this.rings = Array.from({ length: channels }, () => new ChannelRing(capacity));
  }

  pushBatch(startIndex: number, rows: number[][]): void {
    for (let r = 0; r < rows.length; r++) {
      const row = rows[r];
      for (let ch = 0; ch < this.rings.length; ch++) {
        this.rings[ch].push(startIndex + r, row[ch]);
      }
    }
  }

  clear(): void {
    for (const ring of this.rings) ring.clear();
  }
}
