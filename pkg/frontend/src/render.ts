// Canvas drawing. The context is typed structurally so tests can hand in a
// recording stub; only this subset of the 2D API is used.

import type { VehicleRow } from "./protocol.js";
import { pxPerMeter, styleColor, worldToCanvas, type HudModel, type Viewport } from "./view.js";
import { hudLines } from "./view.js";

export interface Canvas2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

// road band matches the conflict-zone half width used by the simulator
const ROAD_HALF_WIDTH_M = 8;
const VEHICLE_LENGTH_M = 5;
const VEHICLE_WIDTH_M = 2;

export function drawBackground(ctx: Canvas2D, vp: Viewport): void {
  const size = vp.canvasSize;
  const k = pxPerMeter(vp);
  const half = ROAD_HALF_WIDTH_M * k;

  ctx.fillStyle = "#0d1117";
  ctx.fillRect(0, 0, size, size);

  ctx.fillStyle = "#21262d";
  ctx.fillRect(0, size / 2 - half, size, 2 * half);
  ctx.fillRect(size / 2 - half, 0, 2 * half, size);

  ctx.strokeStyle = "#8b949e";
  ctx.lineWidth = 1;
  ctx.setLineDash([8, 10]);
  ctx.beginPath();
  ctx.moveTo(0, size / 2);
  ctx.lineTo(size, size / 2);
  ctx.moveTo(size / 2, 0);
  ctx.lineTo(size / 2, size);
  ctx.stroke();
  ctx.setLineDash([]);

  ctx.strokeStyle = "#30363d";
  ctx.strokeRect(size / 2 - half, size / 2 - half, 2 * half, 2 * half);
}

export function drawVehicles(ctx: Canvas2D, vp: Viewport, rows: VehicleRow[]): void {
  const k = pxPerMeter(vp);
  for (const row of rows) {
    const pos = worldToCanvas(row.c_x, row.c_y, vp);
    ctx.save();
    ctx.translate(pos.x, pos.y);
    ctx.rotate(-row.heading); // canvas y is flipped, so angles run clockwise
    ctx.fillStyle = styleColor(row.style);
    ctx.fillRect((-VEHICLE_LENGTH_M / 2) * k, (-VEHICLE_WIDTH_M / 2) * k, VEHICLE_LENGTH_M * k, VEHICLE_WIDTH_M * k);
    if (row.style === "ego") {
      ctx.strokeStyle = "#e6edf3";
      ctx.lineWidth = 1;
      ctx.strokeRect((-VEHICLE_LENGTH_M / 2) * k, (-VEHICLE_WIDTH_M / 2) * k, VEHICLE_LENGTH_M * k, VEHICLE_WIDTH_M * k);
    }
    ctx.restore();
  }
}

export function drawHud(ctx: Canvas2D, hud: HudModel, banner: string | null): void {
  ctx.font = "13px monospace";
  ctx.fillStyle = "#e6edf3";
  hudLines(hud).forEach((line, i) => ctx.fillText(line, 12, 20 + 16 * i));
  if (banner !== null) {
    ctx.font = "16px monospace";
    ctx.fillStyle = "#f0883e";
    ctx.fillText(banner, 12, 140);
  }
}

export function drawScene(ctx: Canvas2D, vp: Viewport, rows: VehicleRow[], hud: HudModel, banner: string | null): void {
  drawBackground(ctx, vp);
  drawVehicles(ctx, vp, rows);
  drawHud(ctx, hud, banner);
}
