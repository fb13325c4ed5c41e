// Keyboard state for driving. Arrow keys map to ego maneuvers; with several
// keys held the highest-precedence one wins: Up > Down > Left > Right.

import { ACTION, type ActionCode } from "./protocol.js";

export type DriveKey = "Up" | "Down" | "Left" | "Right";

const KEY_MAP: Record<string, DriveKey> = {
  ArrowUp: "Up",
  ArrowDown: "Down",
  ArrowLeft: "Left",
  ArrowRight: "Right",
};

export function driveKeyFor(key: string): DriveKey | null {
  return KEY_MAP[key] ?? null;
}

export class KeyTracker {
  private pressed = new Set<DriveKey>();

  keyDown(key: string): boolean {
    const mapped = driveKeyFor(key);
    if (mapped === null) return false;
    this.pressed.add(mapped);
    return true;
  }

  keyUp(key: string): boolean {
    const mapped = driveKeyFor(key);
    if (mapped === null) return false;
    this.pressed.delete(mapped);
    return true;
  }

  clear(): void {
    this.pressed.clear();
  }

  held(): readonly DriveKey[] {
    return [...this.pressed];
  }

  // one action per frame: no keys means hold course
  action(): ActionCode {
    if (this.pressed.has("Up")) return ACTION.ACCELERATE;
    if (this.pressed.has("Down")) return ACTION.SLOW_DOWN;
    if (this.pressed.has("Left")) return ACTION.LANE_LEFT;
    if (this.pressed.has("Right")) return ACTION.LANE_RIGHT;
    return ACTION.CRUISE;
  }
}
