// Pure view math: world-to-canvas transforms, style colors, frame
// interpolation, and the HUD model. Nothing here touches the DOM, and
// nothing here simulates; every pose derives from received frames.

import type { EpisodeEndMessage, FrameMessage, VehicleRow } from "./protocol.js";
import { ACTION_NAMES, type ActionCode } from "./protocol.js";

export const STYLE_COLORS: Record<string, string> = {
  ego: "#2f6fd6",
  aggressive: "#d64545",
  conservative: "#2ea043",
  normal: "#8b949e",
};

export function styleColor(style: string): string {
  return STYLE_COLORS[style] ?? STYLE_COLORS.normal!;
}

export interface Viewport {
  canvasSize: number; // square canvas, pixels
  worldHalfSpan: number; // meters from center to canvas edge
}

export const DEFAULT_VIEWPORT: Viewport = { canvasSize: 660, worldHalfSpan: 115 };

export function pxPerMeter(vp: Viewport): number {
  return vp.canvasSize / (2 * vp.worldHalfSpan);
}

// world y points up, canvas y points down
export function worldToCanvas(x: number, y: number, vp: Viewport): { x: number; y: number } {
  const k = pxPerMeter(vp);
  return { x: vp.canvasSize / 2 + x * k, y: vp.canvasSize / 2 - y * k };
}

function lerpAngle(a: number, b: number, alpha: number): number {
  const tau = 2 * Math.PI;
  let d = (b - a) % tau;
  if (d > Math.PI) d -= tau;
  if (d < -Math.PI) d += tau;
  return a + alpha * d;
}

// Visual smoothing between two received frames; never fed back to the
// service. Vehicles are matched by id; a vehicle without a predecessor
// appears directly at its new pose.
export function interpolateVehicles(prev: FrameMessage | null, next: FrameMessage, alpha: number): VehicleRow[] {
  const a = Math.min(Math.max(alpha, 0), 1);
  const before = new Map<number, VehicleRow>();
  if (prev !== null) for (const row of prev.vehicles) before.set(row.id, row);
  return next.vehicles.map((row) => {
    const p = before.get(row.id);
    if (p === undefined || a >= 1) return row;
    return {
      ...row,
      c_x: p.c_x + a * (row.c_x - p.c_x),
      c_y: p.c_y + a * (row.c_y - p.c_y),
      heading: lerpAngle(p.heading, row.heading, a),
    };
  });
}

export interface HudModel {
  connected: boolean;
  egoSpeed: number | null; // m/s, from the latest frame
  step: number | null;
  episodeResult: string | null;
  recordedSteps: number | null; // service acknowledgment, not local belief
  lastAction: string | null;
}

export function hudModel(
  connected: boolean,
  lastFrame: FrameMessage | null,
  lastEnd: EpisodeEndMessage | null,
  recordedSteps: number | null,
  lastAction: ActionCode | null,
): HudModel {
  const ego = lastFrame?.vehicles.find((v) => v.style === "ego") ?? null;
  return {
    connected,
    egoSpeed: ego === null ? null : Math.hypot(ego.v_x, ego.v_y),
    step: lastFrame?.t ?? null,
    episodeResult: lastEnd?.result ?? null,
    recordedSteps,
    lastAction: lastAction === null ? null : ACTION_NAMES[lastAction],
  };
}

export function hudLines(hud: HudModel): string[] {
  return [
    hud.connected ? "connected" : "disconnected",
    `speed ${hud.egoSpeed === null ? "-" : hud.egoSpeed.toFixed(1)} m/s`,
    `step ${hud.step ?? "-"}`,
    `action ${hud.lastAction ?? "-"}`,
    `last episode ${hud.episodeResult ?? "-"}`,
    `recorded ${hud.recordedSteps === null ? "(no acknowledgment)" : hud.recordedSteps + " steps"}`,
  ];
}
