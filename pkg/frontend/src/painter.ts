/** Drawing surface abstraction: the controller paints through this
 * interface, so tests can record draw calls without a DOM canvas. */

export interface Painter {
  clear(width: number, height: number): void;
  dot(x: number, y: number, r: number): void;
  arrow(x0: number, y0: number, x1: number, y1: number): void;
  hud(lines: string[]): void;
  banner(text: string): void;
}

const BACKGROUND = "#101418";
const AGENT = "#e8e8e8";
const ARROW = "#3fa7ff";
const HUD = "#9ad1a0";
const BANNER_BG = "rgba(160, 40, 40, 0.85)";

export class CanvasPainter implements Painter {
  constructor(private readonly ctx: CanvasRenderingContext2D) {}

  clear(width: number, height: number): void {
    this.ctx.fillStyle = BACKGROUND;
    this.ctx.fillRect(0, 0, width, height);
  }

  dot(x: number, y: number, r: number): void {
    this.ctx.beginPath();
    this.ctx.arc(x, y, Math.max(r, 1), 0, Math.PI * 2);
    this.ctx.fillStyle = AGENT;
    this.ctx.fill();
  }

  arrow(x0: number, y0: number, x1: number, y1: number): void {
    const dx = x1 - x0;
    const dy = y1 - y0;
    const len = Math.hypot(dx, dy);
    this.ctx.strokeStyle = ARROW;
    this.ctx.lineWidth = 1.5;
    if (len < 0.5) {
      // near-zero vector: mark the node instead of drawing a degenerate line
      this.ctx.beginPath();
      this.ctx.arc(x0, y0, 1.5, 0, Math.PI * 2);
      this.ctx.stroke();
      return;
    }
    this.ctx.beginPath();
    this.ctx.moveTo(x0, y0);
    this.ctx.lineTo(x1, y1);
    const angle = Math.atan2(dy, dx);
    const head = Math.min(6, len * 0.4);
    for (const side of [-1, 1]) {
      const a = angle + side * 2.6;
      this.ctx.moveTo(x1, y1);
      this.ctx.lineTo(x1 + head * Math.cos(a), y1 + head * Math.sin(a));
    }
    this.ctx.stroke();
  }

  hud(lines: string[]): void {
    this.ctx.font = "12px monospace";
    this.ctx.fillStyle = HUD;
    lines.forEach((line, i) => {
      this.ctx.fillText(line, 8, 16 + i * 14);
    });
  }

  banner(text: string): void {
    const w = this.ctx.canvas.width;
    this.ctx.fillStyle = BANNER_BG;
    this.ctx.fillRect(0, 0, w, 24);
    this.ctx.font = "bold 12px monospace";
    this.ctx.fillStyle = "#ffffff";
    this.ctx.fillText(text, 8, 16);
  }
}
