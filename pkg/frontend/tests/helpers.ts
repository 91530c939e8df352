/** Shared test utilities: polling and a painter that records draw calls
 * instead of touching a canvas. clear() starts a new recording, like a
 * repaint wipes a real surface. */

import type { Painter } from "../src/painter.js";

export async function waitFor(
  check: () => boolean,
  timeoutMs = 2000,
  intervalMs = 10,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((r) => setTimeout(r, intervalMs));
  }
  if (!check()) throw new Error(`condition not met within ${timeoutMs}ms`);
}

export interface RecordedDot {
  x: number;
  y: number;
  r: number;
}

export interface RecordedArrow {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export class RecordingPainter implements Painter {
  clears = 0;
  dots: RecordedDot[] = [];
  arrows: RecordedArrow[] = [];
  hudLines: string[] = [];
  banners: string[] = [];

  clear(): void {
    this.clears += 1;
    this.dots = [];
    this.arrows = [];
    this.hudLines = [];
    this.banners = [];
  }

  dot(x: number, y: number, r: number): void {
    this.dots.push({ x, y, r });
  }

  arrow(x0: number, y0: number, x1: number, y1: number): void {
    this.arrows.push({ x0, y0, x1, y1 });
  }

  hud(lines: string[]): void {
    this.hudLines = lines;
  }

  banner(text: string): void {
    this.banners.push(text);
  }
}
