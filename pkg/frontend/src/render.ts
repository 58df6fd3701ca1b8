// Canvas renderer: world meters -> screen pixels with simple pan/zoom.
// Takes a minimal 2-D context interface so tests can record draw calls.

import { Point } from "./protocol.js";
import { SessionState } from "./state.js";

export interface Ctx2D {
  canvas: { width: number; height: number };
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export class Camera {
  scale = 0.8; // pixels per meter
  offsetX = 0;
  offsetY = 0;

  toScreen(p: Point, height: number): Point {
    // y grows north in the world, south on the canvas
    return [p[0] * this.scale + this.offsetX, height - (p[1] * this.scale + this.offsetY)];
  }

  pan(dx: number, dy: number): void {
    this.offsetX += dx;
    this.offsetY -= dy;
  }

  zoom(factor: number, cx: number, cy: number, height: number): void {
    const before = this.toWorld([cx, cy], height);
    this.scale = Math.min(8, Math.max(0.2, this.scale * factor));
    const after = this.toWorld([cx, cy], height);
    this.offsetX += (after[0] - before[0]) * this.scale;
    this.offsetY += (after[1] - before[1]) * this.scale;
  }

  toWorld(p: Point, height: number): Point {
    return [(p[0] - this.offsetX) / this.scale, (height - p[1] - this.offsetY) / this.scale];
  }
}

function poly(ctx: Ctx2D, cam: Camera, pts: Point[], h: number, close: boolean) {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [x, y] = cam.toScreen(p, h);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  if (close) ctx.closePath();
}

export function render(ctx: Ctx2D, view: SessionState, cam: Camera): void {
  const h = ctx.canvas.height;
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, ctx.canvas.width, h);
  if (!view.map) return;

  // roads
  ctx.strokeStyle = "#3d4a5c";
  ctx.lineWidth = 2;
  for (const [a, b] of view.map.edges) {
    poly(ctx, cam, [view.map.nodes[a], view.map.nodes[b]], h, false);
    ctx.stroke();
  }

  // landmarks
  ctx.fillStyle = "#8a939f";
  ctx.font = "11px sans-serif";
  for (const [name, pos] of view.map.landmarks) {
    const [x, y] = cam.toScreen(pos, h);
    ctx.fillRect(x - 2, y - 2, 4, 4);
    ctx.fillText(name, x + 5, y - 4);
  }

  // belief cloud
  ctx.fillStyle = "#2f81f7";
  ctx.globalAlpha = 0.35;
  for (const p of view.belief) {
    const [x, y] = cam.toScreen(p, h);
    ctx.fillRect(x - 1, y - 1, 2, 2);
  }
  ctx.globalAlpha = 1;

  // registered sketch outlines (server acks only)
  ctx.strokeStyle = "#d2a8ff";
  ctx.lineWidth = 1.5;
  for (const [name, outline] of view.outlines) {
    poly(ctx, cam, outline, h, true);
    ctx.stroke();
    const [x, y] = cam.toScreen(outline[0], h);
    ctx.fillStyle = "#d2a8ff";
    ctx.fillText(name, x + 4, y);
  }

  // fading glimpse markers
  for (const g of view.visibleGlimpses()) {
    const age = view.t - g.t;
    ctx.globalAlpha = Math.max(0.1, 1 - age / 10);
    ctx.strokeStyle = "#f0883e";
    const [x, y] = cam.toScreen(g.pos, h);
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.globalAlpha = 1;

  // robot trail and pose
  if (view.trail.length > 1) {
    ctx.strokeStyle = "#56d364";
    ctx.lineWidth = 1;
    poly(ctx, cam, view.trail, h, false);
    ctx.stroke();
  }
  if (view.robot) {
    const [x, y] = cam.toScreen(view.robot, h);
    ctx.fillStyle = "#56d364";
    ctx.beginPath();
    ctx.arc(x, y, 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.beginPath();
    ctx.moveTo(x, y);
    ctx.lineTo(x + 14 * Math.cos(view.heading), y - 14 * Math.sin(view.heading));
    ctx.stroke();
  }

  // current stroke (local echo only; the ack polygon is authoritative)
  if (view.stroke.length > 1) {
    ctx.strokeStyle = "#e3b341";
    ctx.lineWidth = 1;
    poly(ctx, cam, view.stroke, h, false);
    ctx.stroke();
  }
}
