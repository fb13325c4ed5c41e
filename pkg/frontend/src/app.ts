// Session controller: owns the socket, tracks the last two frames for
// interpolated rendering, and answers every received frame with exactly one
// action message while in drive mode. All state changes flow from server
// messages; the app never simulates.

import { KeyTracker } from "./input.js";
import {
  actionMessage,
  controlMessage,
  parseServerMessage,
  type ActionCode,
  type ControlCommand,
  type EpisodeEndMessage,
  type FrameMessage,
  type ServerMessage,
  type VehicleRow,
} from "./protocol.js";
import { hudModel, interpolateVehicles, type HudModel } from "./view.js";

export type SocketEvent =
  | { kind: "open" }
  | { kind: "message"; text: string }
  | { kind: "close" };

export interface SessionSocket {
  send(text: string): void;
  close(): void;
}

export type SocketFactory = (url: string, onEvent: (e: SocketEvent) => void) => SessionSocket;

export type AppMode = "drive" | "watch";

const FALLBACK_FRAME_INTERVAL_MS = 100; // service frames arrive at 10 Hz

export class SessionApp {
  readonly keys = new KeyTracker();

  connected = false;
  banner: string | null = "disconnected";
  framesSeen = 0;
  actionsSent = 0;

  private socket: SessionSocket | null = null;
  private prevFrame: FrameMessage | null = null;
  private lastFrame: FrameMessage | null = null;
  private prevTime = 0;
  private lastTime = 0;
  private lastEnd: EpisodeEndMessage | null = null;
  private recordedSteps: number | null = null;
  private lastAction: ActionCode | null = null;

  onServerMessage: ((msg: ServerMessage) => void) | null = null;

  constructor(
    private readonly factory: SocketFactory,
    private readonly url: string,
    readonly mode: AppMode = "drive",
    private readonly now: () => number = () => Date.now(),
  ) {}

  connect(): void {
    if (this.socket !== null) return;
    this.socket = this.factory(this.url, (e) => this.handle(e));
  }

  disconnect(): void {
    this.socket?.close();
  }

  control(command: ControlCommand): boolean {
    // controls are disabled while disconnected
    if (!this.connected || this.socket === null) return false;
    this.socket.send(controlMessage(command));
    return true;
  }

  private handle(e: SocketEvent): void {
    if (e.kind === "open") {
      this.connected = true;
      this.banner = null;
      return;
    }
    if (e.kind === "close") {
      this.connected = false;
      this.socket = null;
      this.banner = "disconnected";
      return;
    }
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(e.text);
    } catch (err) {
      this.banner = err instanceof Error ? err.message : String(err);
      return;
    }
    if (msg.type === "frame") {
      this.prevFrame = this.lastFrame;
      this.prevTime = this.lastTime;
      this.lastFrame = msg;
      this.lastTime = this.now();
      this.framesSeen += 1;
      if (this.mode === "drive" && this.socket !== null) {
        const code = this.keys.action();
        this.socket.send(actionMessage(code));
        this.lastAction = code;
        this.actionsSent += 1;
      }
    } else if (msg.type === "episode_end") {
      this.lastEnd = msg;
      const acked = msg.metrics.recorded_steps;
      if (typeof acked === "number") this.recordedSteps = acked;
    } else {
      this.banner = msg.text;
    }
    this.onServerMessage?.(msg);
  }

  // interpolation runs one frame interval behind the stream, purely visual
  vehiclesAt(tMs: number): VehicleRow[] {
    if (this.lastFrame === null) return [];
    if (this.prevFrame === null) return this.lastFrame.vehicles;
    const interval = this.lastTime > this.prevTime ? this.lastTime - this.prevTime : FALLBACK_FRAME_INTERVAL_MS;
    const alpha = (tMs - this.lastTime) / interval;
    return interpolateVehicles(this.prevFrame, this.lastFrame, alpha);
  }

  hud(): HudModel {
    return hudModel(this.connected, this.lastFrame, this.lastEnd, this.recordedSteps, this.lastAction);
  }

  lastEpisodeEnd(): EpisodeEndMessage | null {
    return this.lastEnd;
  }
}
