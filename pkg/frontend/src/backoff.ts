/** Reconnect backoff: exponential from 500 ms, capped at 10 s. */

export const BACKOFF_BASE_MS = 500;
export const BACKOFF_CAP_MS = 10_000;

export class Backoff {
  private attempts = 0;

  nextDelayMs(): number {
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_CAP_MS);
    this.attempts++;
    return delay;
  }

  reset(): void {
    this.attempts = 0;
  }
}
