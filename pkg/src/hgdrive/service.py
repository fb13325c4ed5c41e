"""Websocket session service: live driving, demonstration recording, replay.

One session at a time owns the simulator. All mutation happens on the event
loop (the serialized command queue); the receiver task only writes the
latest pending action and control flags, the stepper task consumes them.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import RunConfig
from .expert import Demonstration, episode_seed, write_dataset
from .graph import build_graph
from .trajlog import read_trajectory, step_records
from .vehicle import EgoAction
from .world import DT, spawn_scenario

FRAME_FIELDS = ("id", "style", "c_x", "c_y", "v_x", "v_y", "a_x", "lane", "heading")


def frame_message(t: int, rows: list) -> dict:
    vehicles = [{k: r[k] for k in FRAME_FIELDS} for r in rows]
    return {"type": "frame", "t": t, "vehicles": vehicles}


def episode_end_message(result: str, metrics: dict) -> dict:
    return {"type": "episode_end", "result": result, "metrics": metrics}


def error_message(text: str) -> dict:
    return {"type": "error", "text": text}


def parse_client_message(raw: str):
    """Validate one incoming message; returns a dict or raises ValueError."""
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    if not isinstance(msg, dict) or "type" not in msg:
        raise ValueError("message must be an object with a 'type' field")
    kind = msg["type"]
    if kind == "action":
        code = msg.get("code")
        if not isinstance(code, int) or not 0 <= code <= 4:
            raise ValueError("action code must be an integer in 0..4")
        return msg
    if kind == "control":
        command = msg.get("command")
        if command not in ("start", "pause", "reset", "replay"):
            raise ValueError("control command must be start, pause, reset, or replay")
        return msg
    raise ValueError(f"unsupported message type: {kind!r}")


@dataclass
class LiveSession:
    """Mutable state for one connected driving session."""

    config: RunConfig
    base_seed: int
    dataset_path: str | None = None
    episode_index: int = 0
    running: bool = False
    pending_action: int | None = None
    world: object = None
    step: int = 0
    reward_sum: float = 0.0
    episode_records: list = field(default_factory=list)
    saved_records: list = field(default_factory=list)

    def spawn(self):
        self.world = spawn_scenario(episode_seed(self.base_seed, self.episode_index), self.config.scenario)
        self.step = 0
        self.reward_sum = 0.0
        self.episode_records = []

    def next_episode(self):
        self.episode_index += 1
        self.spawn()

    def take_action(self) -> EgoAction:
        code = self.pending_action
        self.pending_action = None
        return EgoAction(code) if code is not None else EgoAction.CRUISE

    def advance(self):
        """One simulation step; returns (frame, episode_end-or-None)."""
        action = self.take_action()
        if self.dataset_path is not None:
            self.episode_records.append(
                Demonstration(
                    graph=build_graph(self.world),
                    action=action,
                    episode_id=self.episode_index,
                    step=self.step,
                )
            )
        outcome = self.world.step(action)
        self.step += 1
        self.reward_sum += outcome.reward
        frame = frame_message(self.step, step_records(self.episode_index, self.step, self.world))
        if not outcome.done:
            return frame, None
        if outcome.collided:
            result = "collision"
        elif outcome.goal_reached:
            result = "goal"
        else:
            result = "timeout"
        metrics = {"steps": self.step, "reward": self.reward_sum, "episode": self.episode_index}
        if self.dataset_path is not None:
            # acknowledged recording state rides on episode_end so clients
            # can show what the service persisted rather than local belief
            metrics["recorded_steps"] = len(self.episode_records)
            self.saved_records.extend(self.episode_records)
            write_dataset(self.dataset_path, self.saved_records, self.config.scales)
        self.episode_records = []
        return frame, episode_end_message(result, metrics)


def create_app(
    config: RunConfig,
    seed: int | None = None,
    realtime_factor: float = 1.0,
    dataset_path: str | None = None,
) -> FastAPI:
    """Live simulation service; a positive realtime factor paces frames at
    factor * 10 steps/s, zero streams unpaced."""
    app = FastAPI()
    base_seed = seed if seed is not None else config.drl.seed
    busy = {"active": False}

    @app.websocket("/session")
    async def session(ws: WebSocket):
        await ws.accept()
        if busy["active"]:
            await ws.send_json(error_message("another session is active"))
            await ws.close()
            return
        busy["active"] = True
        state = LiveSession(config=config, base_seed=base_seed, dataset_path=dataset_path)
        state.spawn()
        delay = (DT / realtime_factor) if realtime_factor > 0 else 0.0

        async def receiver():
            # sole writer of control/action state; runs on the same loop as
            # the stepper, so each step sees a consistent snapshot
            async for raw in ws.iter_text():
                try:
                    msg = parse_client_message(raw)
                except ValueError as exc:
                    await ws.send_json(error_message(str(exc)))
                    continue
                if msg["type"] == "action":
                    state.pending_action = msg["code"]
                    continue
                command = msg["command"]
                if command == "start":
                    state.running = True
                elif command == "pause":
                    state.running = False
                elif command == "reset":
                    state.next_episode()
                else:
                    await ws.send_json(error_message("replay is not available in a live session"))

        async def stepper():
            while True:
                if not state.running:
                    await asyncio.sleep(0.005)
                    continue
                await asyncio.sleep(delay)
                frame, end = state.advance()
                await ws.send_json(frame)
                if end is not None:
                    await ws.send_json(end)
                    state.next_episode()

        recv_task = asyncio.ensure_future(receiver())
        step_task = asyncio.ensure_future(stepper())
        try:
            done, pending = await asyncio.wait({recv_task, step_task}, return_when=asyncio.FIRST_COMPLETED)
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if exc is not None and not isinstance(exc, WebSocketDisconnect):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            busy["active"] = False

    return app


def group_frames(rows: list) -> list:
    """Trajectory rows -> [(episode, step, rows)] in log order."""
    groups = []
    key = None
    for row in rows:
        k = (row["episode"], row["step"])
        if k != key:
            groups.append((row["episode"], row["step"], []))
            key = k
        groups[-1][2].append(row)
    return groups


def create_replay_app(config: RunConfig, log_path: str, realtime_factor: float = 1.0) -> FastAPI:
    """Replay service: streams logged frames verbatim; nothing is simulated."""
    app = FastAPI()
    groups = group_frames(read_trajectory(log_path))
    delay = (DT / realtime_factor) if realtime_factor > 0 else 0.0

    @app.websocket("/session")
    async def session(ws: WebSocket):
        await ws.accept()
        paused = False
        try:
            i = 0
            while i < len(groups):
                raw = None
                if paused:
                    raw = await ws.receive_text()
                elif delay > 0:
                    try:
                        raw = await asyncio.wait_for(ws.receive_text(), timeout=delay)
                    except asyncio.TimeoutError:
                        raw = None
                if raw is not None:
                    try:
                        msg = parse_client_message(raw)
                    except ValueError as exc:
                        await ws.send_json(error_message(str(exc)))
                        continue
                    if msg["type"] == "control":
                        if msg["command"] == "pause":
                            paused = True
                        elif msg["command"] in ("start", "replay"):
                            paused = False
                    continue
                episode, step, rows = groups[i]
                await ws.send_json(frame_message(step, rows))
                i += 1
                if i == len(groups) or groups[i][0] != episode:
                    await ws.send_json(episode_end_message("replay", {"episode": episode, "steps": step + 1}))
            await ws.close()
        except WebSocketDisconnect:
            pass

    return app
