// Mirror of the websocket session JSON contract. The service is the source
// of truth; this file only validates and types what crosses the wire.

export const ACTION = {
  ACCELERATE: 0,
  SLOW_DOWN: 1,
  CRUISE: 2,
  LANE_LEFT: 3,
  LANE_RIGHT: 4,
} as const;

export type ActionCode = (typeof ACTION)[keyof typeof ACTION];

export const ACTION_NAMES: Record<ActionCode, string> = {
  0: "Accelerate",
  1: "SlowDown",
  2: "Cruise",
  3: "LaneLeft",
  4: "LaneRight",
};

export interface VehicleRow {
  id: number;
  style: string;
  c_x: number;
  c_y: number;
  v_x: number;
  v_y: number;
  a_x: number;
  lane: number;
  heading: number;
}

export interface FrameMessage {
  type: "frame";
  t: number;
  vehicles: VehicleRow[];
}

export interface EpisodeEndMessage {
  type: "episode_end";
  result: string;
  metrics: Record<string, number>;
}

export interface ErrorMessage {
  type: "error";
  text: string;
}

export type ServerMessage = FrameMessage | EpisodeEndMessage | ErrorMessage;

export type ControlCommand = "start" | "pause" | "reset" | "replay";

const VEHICLE_NUMBER_FIELDS = ["id", "c_x", "c_y", "v_x", "v_y", "a_x", "lane", "heading"] as const;

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function parseVehicle(v: unknown): VehicleRow {
  if (!isRecord(v)) throw new Error("vehicle row must be an object");
  for (const field of VEHICLE_NUMBER_FIELDS) {
    if (typeof v[field] !== "number") throw new Error(`vehicle field ${field} must be a number`);
  }
  if (typeof v.style !== "string") throw new Error("vehicle field style must be a string");
  return v as unknown as VehicleRow;
}

export function parseServerMessage(raw: string): ServerMessage {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    throw new Error("server message is not valid JSON");
  }
  if (!isRecord(msg) || typeof msg.type !== "string") {
    throw new Error("server message must be an object with a type field");
  }
  if (msg.type === "frame") {
    if (typeof msg.t !== "number" || !Array.isArray(msg.vehicles)) {
      throw new Error("frame needs numeric t and a vehicles array");
    }
    return { type: "frame", t: msg.t, vehicles: msg.vehicles.map(parseVehicle) };
  }
  if (msg.type === "episode_end") {
    if (typeof msg.result !== "string" || !isRecord(msg.metrics)) {
      throw new Error("episode_end needs a result string and a metrics object");
    }
    for (const [k, v] of Object.entries(msg.metrics)) {
      if (typeof v !== "number") throw new Error(`episode_end metric ${k} must be a number`);
    }
    return { type: "episode_end", result: msg.result, metrics: msg.metrics as Record<string, number> };
  }
  if (msg.type === "error") {
    if (typeof msg.text !== "string") throw new Error("error needs a text field");
    return { type: "error", text: msg.text };
  }
  throw new Error(`unsupported server message type: ${msg.type}`);
}

export function actionMessage(code: ActionCode): string {
  return JSON.stringify({ type: "action", code });
}

export function controlMessage(command: ControlCommand): string {
  return JSON.stringify({ type: "control", command });
}
