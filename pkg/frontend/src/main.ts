// Browser entry point: binds the session app to the DOM, the native
// WebSocket, and requestAnimationFrame.

import { SessionApp, type AppMode, type SocketFactory } from "./app.js";
import { drawScene, type Canvas2D } from "./render.js";
import { DEFAULT_VIEWPORT } from "./view.js";

const browserSocketFactory: SocketFactory = (url, onEvent) => {
  const ws = new WebSocket(url);
  ws.onopen = () => onEvent({ kind: "open" });
  ws.onmessage = (e) => onEvent({ kind: "message", text: String(e.data) });
  ws.onclose = () => onEvent({ kind: "close" });
  return { send: (text) => ws.send(text), close: () => ws.close() };
};

function must<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

const canvas = must<HTMLCanvasElement>("scene");
const ctx = canvas.getContext("2d") as unknown as Canvas2D;
const urlInput = must<HTMLInputElement>("url");
const modeSelect = must<HTMLSelectElement>("mode");

let app: SessionApp | null = null;

must<HTMLButtonElement>("connect").addEventListener("click", () => {
  app?.disconnect();
  app = new SessionApp(browserSocketFactory, urlInput.value, modeSelect.value as AppMode, () => performance.now());
  app.connect();
});

for (const command of ["start", "pause", "reset", "replay"] as const) {
  must<HTMLButtonElement>(command).addEventListener("click", () => app?.control(command));
}

window.addEventListener("keydown", (e) => {
  if (app?.keys.keyDown(e.key)) e.preventDefault();
});
window.addEventListener("keyup", (e) => {
  if (app?.keys.keyUp(e.key)) e.preventDefault();
});

function paint(tMs: number): void {
  if (app !== null) {
    drawScene(ctx, DEFAULT_VIEWPORT, app.vehiclesAt(tMs), app.hud(), app.banner);
  }
  requestAnimationFrame(paint);
}

requestAnimationFrame(paint);
