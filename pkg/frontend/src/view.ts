/** Console view state. Stream consumption and rendering are decoupled by
 * a one-frame buffer: the newest received record overwrites the slot, and
 * the paint loop drains it, so the rendered frame is always the most
 * recently received one. */

import type { Frame, ScoreResult } from "./api.js";
import type { StreamStatus } from "./stream.js";

export interface PromptEntry {
  text: string;
  at: number; // ms since epoch
}

export class ViewState {
  sessionId: string | null = null;
  status: StreamStatus = "connecting";
  overlayOn = true;
  vectors: number[][][] | null = null;
  promptHistory: PromptEntry[] = [];
  lastScore: ScoreResult | null = null;

  private pending: Frame | null = null;
  private current: Frame | null = null;

  pushFrame(frame: Frame): void {
    this.pending = frame;
  }

  /** Latest received frame, or null before the first record arrives. */
  frame(): Frame | null {
    if (this.pending !== null) {
      this.current = this.pending;
      this.pending = null;
    }
    return this.current;
  }

  recordPrompt(text: string, at: number = Date.now()): void {
    this.promptHistory.push({ text, at });
  }
}
