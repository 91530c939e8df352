/** Console controller: owns one steering session and its frame stream,
 * and paints the current view through a Painter. All simulation state
 * changes go through the service API, never locally. */

import { SteerClient, type CreateOptions, type FieldInfo, type ScoreResult } from "./api.js";
import { fieldArrows, toCanvas } from "./overlay.js";
import type { Painter } from "./painter.js";
import { FrameStream, type BackoffOptions } from "./stream.js";
import { ViewState } from "./view.js";

export interface ConsoleOptions {
  url: string;
  /** Arena side length of the server's physics, for display scaling. */
  arena?: number;
  /** Agent radius of the server's physics, for display scaling. */
  radius?: number;
  seed?: number;
  checkpoint?: string;
  frameRate?: number;
  backoff?: BackoffOptions;
  fetchFn?: typeof fetch;
}

const DEFAULT_ARENA = 500;
const DEFAULT_RADIUS = 5;

export function canSubmit(text: string): boolean {
  return text.trim().length > 0;
}

export class SteerConsole {
  readonly view = new ViewState();
  readonly arena: number;
  readonly radius: number;

  private readonly client: SteerClient;
  private stream: FrameStream | null = null;
  private streamDone: Promise<void> | null = null;

  constructor(private readonly opts: ConsoleOptions) {
    this.client = new SteerClient(opts.url, opts.fetchFn ?? fetch);
    this.arena = opts.arena ?? DEFAULT_ARENA;
    this.radius = opts.radius ?? DEFAULT_RADIUS;
  }

  /** Create the session and start streaming frames into the view. */
  async connect(): Promise<void> {
    const create: CreateOptions = {};
    if (this.opts.seed !== undefined) create.seed = this.opts.seed;
    if (this.opts.checkpoint !== undefined) create.checkpoint = this.opts.checkpoint;
    if (this.opts.frameRate !== undefined) create.frameRate = this.opts.frameRate;
    const info = await this.client.createSession(create);
    this.view.sessionId = info.id;
    this.stream = new FrameStream(
      this.client.streamUrl(info.id),
      {
        onFrame: (frame) => this.view.pushFrame(frame),
        onStatus: (status) => {
          this.view.status = status;
        },
      },
      this.opts.backoff ?? {},
      this.opts.fetchFn ?? fetch,
    );
    this.streamDone = this.stream.run();
  }

  async submitPrompt(text: string): Promise<FieldInfo> {
    if (!canSubmit(text)) {
      throw new Error("prompt must be non-empty");
    }
    const field = await this.client.applyPrompt(this.sessionId(), text);
    this.view.vectors = field.vectors;
    this.view.recordPrompt(text);
    return field;
  }

  toggleOverlay(): boolean {
    this.view.overlayOn = !this.view.overlayOn;
    return this.view.overlayOn;
  }

  async requestScore(prompt: string): Promise<ScoreResult> {
    const result = await this.client.score(this.sessionId(), prompt);
    this.view.lastScore = result;
    return result;
  }

  async pause(): Promise<void> {
    await this.client.pause(this.sessionId());
  }

  async resume(): Promise<void> {
    await this.client.resume(this.sessionId());
  }

  async reset(): Promise<void> {
    await this.client.reset(this.sessionId());
  }

  /** Stop streaming and delete the session. */
  async dispose(): Promise<void> {
    this.stream?.stop();
    if (this.streamDone) await this.streamDone;
    const sid = this.view.sessionId;
    if (sid !== null) {
      this.view.sessionId = null;
      await this.client.deleteSession(sid).catch(() => undefined);
    }
  }

  /** Paint the latest frame, overlay, and HUD onto a square surface. */
  paint(painter: Painter, side: number): void {
    const frame = this.view.frame();
    painter.clear(side, side);
    if (this.view.overlayOn && this.view.vectors !== null) {
      for (const a of fieldArrows(this.view.vectors, side)) {
        painter.arrow(a.x0, a.y0, a.x1, a.y1);
      }
    }
    if (frame !== null) {
      const r = (this.radius / this.arena) * side;
      for (const [x, y] of frame.positions) {
        const [px, py] = toCanvas(x, y, this.arena, side);
        painter.dot(px, py, r);
      }
    }
    painter.hud(this.hudLines(frame?.step ?? null));
    if (this.view.status === "reconnecting") {
      painter.banner("connection lost, reconnecting");
    }
  }

  private hudLines(step: number | null): string[] {
    const lines = [`step ${step ?? "-"}  [${this.view.status}]`];
    const score = this.view.lastScore;
    if (score !== null) {
      let line = `score ${score.score.toFixed(4)} (${score.source})`;
      if (score.description) line += `: ${score.description}`;
      lines.push(line);
    }
    return lines;
  }

  private sessionId(): string {
    if (this.view.sessionId === null) {
      throw new Error("not connected");
    }
    return this.view.sessionId;
  }
}
