/** Frame stream consumer: reads newline-delimited frame records from a
 * persistent connection and reconnects with exponential backoff when the
 * connection drops. */

import type { Frame } from "./api.js";
import { readLines } from "./lines.js";

export type StreamStatus = "connecting" | "live" | "reconnecting" | "stopped";

export interface StreamCallbacks {
  onFrame(frame: Frame): void;
  onStatus(status: StreamStatus): void;
}

export interface BackoffOptions {
  initialDelayMs?: number;
  maxDelayMs?: number;
}

const INITIAL_DELAY_MS = 500;
const MAX_DELAY_MS = 8000;

export class FrameStream {
  private stopped = false;
  private controller: AbortController | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private wake: (() => void) | null = null;
  private lastStatus: StreamStatus | null = null;
  private readonly initialDelayMs: number;
  private readonly maxDelayMs: number;

  constructor(
    private readonly url: string,
    private readonly callbacks: StreamCallbacks,
    backoff: BackoffOptions = {},
    private readonly fetchFn: typeof fetch = fetch,
  ) {
    this.initialDelayMs = backoff.initialDelayMs ?? INITIAL_DELAY_MS;
    this.maxDelayMs = backoff.maxDelayMs ?? MAX_DELAY_MS;
  }

  /** Read until stop(); never rejects, every failure goes through backoff. */
  async run(): Promise<void> {
    let delay = this.initialDelayMs;
    this.setStatus("connecting");
    while (!this.stopped) {
      try {
        this.controller = new AbortController();
        const res = await this.fetchFn(this.url, { signal: this.controller.signal });
        if (!res.ok || res.body === null) {
          throw new Error(`stream returned ${res.status}`);
        }
        this.setStatus("live");
        delay = this.initialDelayMs;
        for await (const line of readLines(res.body)) {
          this.callbacks.onFrame(JSON.parse(line) as Frame);
          if (this.stopped) return;
        }
        throw new Error("stream ended");
      } catch {
        if (this.stopped) return;
        this.setStatus("reconnecting");
        await this.sleep(delay);
        delay = Math.min(delay * 2, this.maxDelayMs);
      }
    }
  }

  stop(): void {
    this.stopped = true;
    this.setStatus("stopped");
    this.controller?.abort();
    if (this.timer !== null) clearTimeout(this.timer);
    this.wake?.();
  }

  private setStatus(status: StreamStatus): void {
    if (status === this.lastStatus) return;
    this.lastStatus = status;
    this.callbacks.onStatus(status);
  }

  private sleep(ms: number): Promise<void> {
    return new Promise((resolve) => {
      this.wake = resolve;
      this.timer = setTimeout(() => {
        this.wake = null;
        this.timer = null;
        resolve();
      }, ms);
    });
  }
}
