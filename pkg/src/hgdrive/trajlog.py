"""Line-delimited trajectory logs: one record per step per vehicle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .nn.checkpoint import atomic_write_text

LOG_SCHEMA = 1


def step_records(episode: int, step: int, world) -> list:
    rows = []
    for v in world.vehicles:
        rows.append(
            {
                "episode": episode,
                "step": step,
                "id": v.id,
                "style": v.style.value,
                "c_x": v.c_x,
                "c_y": v.c_y,
                "v_x": v.v_x,
                "v_y": v.v_y,
                "a_x": v.a_x,
                "lane": v.lane_index,
                "heading": v.heading,
            }
        )
    return rows


@dataclass
class TrajectoryWriter:
    """Buffers full-precision records and writes the file atomically."""

    path: str
    rows: list = field(default_factory=list)

    def record(self, episode: int, step: int, world) -> None:
        self.rows.extend(step_records(episode, step, world))

    def close(self) -> None:
        lines = [json.dumps({"schema": LOG_SCHEMA, "kind": "trajectory"}, separators=(",", ":"))]
        lines.extend(json.dumps(r, separators=(",", ":")) for r in self.rows)
        atomic_write_text(self.path, "\n".join(lines) + "\n")


def read_trajectory(path: str) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "trajectory" or header.get("schema") != LOG_SCHEMA:
            raise ValueError(f"unrecognized trajectory header in {path}")
        return [json.loads(line) for line in fh if line.strip()]
