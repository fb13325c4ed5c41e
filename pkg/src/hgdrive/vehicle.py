"""Vehicle state, driver styles, and car-following parameter presets."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

from .geometry import Route, VEHICLE_LENGTH, VEHICLE_WIDTH

ACCEL_HISTORY_LEN = 5
DECEL_LIMIT = 4.5  # hard floor on commanded acceleration, m/s^2
EGO_V_MAX = 20.0
SPEED_STEP = 2.0  # ego desired-speed increment per action


class DriverStyle(Enum):
    EGO = "ego"
    AGGRESSIVE = "aggressive"
    NORMAL = "normal"
    CONSERVATIVE = "conservative"

    @property
    def key(self) -> str:
        """Short relation key used by the graph and network layers."""
        return {"aggressive": "agg", "normal": "nor", "conservative": "con"}[self.value]


class EgoAction(IntEnum):
    ACCELERATE = 0
    SLOW_DOWN = 1
    CRUISE = 2
    LANE_LEFT = 3
    LANE_RIGHT = 4


@dataclass(frozen=True)
class IdmParams:
    """Intelligent-driver-model constants; v_star is the desired speed."""

    a_max: float
    delta: float
    v_star: float
    s_0: float
    T_gap: float
    b_comf: float

    def __post_init__(self):
        if self.v_star <= 0:
            raise ValueError("v_star must be positive")


IDM_PRESETS = {
    DriverStyle.AGGRESSIVE: IdmParams(a_max=4.5, delta=5, v_star=20.0, s_0=1.2, T_gap=1.0, b_comf=2.0),
    DriverStyle.NORMAL: IdmParams(a_max=3.5, delta=4, v_star=16.0, s_0=1.6, T_gap=1.5, b_comf=2.0),
    DriverStyle.CONSERVATIVE: IdmParams(a_max=2.5, delta=4, v_star=12.0, s_0=2.0, T_gap=2.0, b_comf=2.0),
}

# The ego tracks an action-controlled desired speed on otherwise normal-style
# constants; v_star here is a placeholder swapped per step.
EGO_IDM_BASE = IDM_PRESETS[DriverStyle.NORMAL]


def ego_idm(target_speed: float) -> IdmParams:
    return replace(EGO_IDM_BASE, v_star=max(target_speed, 1e-6))


@dataclass(frozen=True)
class MobilParams:
    politeness: float = 0.3
    accel_threshold: float = 0.2
    b_safe: float = 4.0


@dataclass
class VehicleState:
    """Pose plus route-relative bookkeeping for one vehicle."""

    id: int
    style: DriverStyle
    route: Route
    s: float  # centerline arclength of the vehicle center
    speed: float = 0.0
    accel: float = 0.0
    target_speed: float = 0.0  # ego only; HVs use their style v_star
    length: float = VEHICLE_LENGTH
    width: float = VEHICLE_WIDTH
    c_x: float = 0.0
    c_y: float = 0.0
    heading: float = 0.0
    v_x: float = 0.0
    v_y: float = 0.0
    a_x: float = 0.0
    accel_history: deque = field(default_factory=lambda: deque([0.0] * ACCEL_HISTORY_LEN, maxlen=ACCEL_HISTORY_LEN))

    def __post_init__(self):
        self.refresh_pose()

    @property
    def is_ego(self) -> bool:
        return self.style is DriverStyle.EGO

    @property
    def lane_index(self) -> int:
        return self.route.lane

    @property
    def front(self) -> float:
        return self.s + self.length / 2

    @property
    def rear(self) -> float:
        return self.s - self.length / 2

    @property
    def avg_recent_accel(self) -> float:
        return sum(self.accel_history) / len(self.accel_history)

    def refresh_pose(self) -> None:
        x, y, heading = self.route.position(self.s)
        self.c_x, self.c_y, self.heading = x, y, heading
        self.v_x = self.speed * math.cos(heading)
        self.v_y = self.speed * math.sin(heading)
        self.a_x = self.accel

    def entered_zone(self, margin: float = 0.0) -> bool:
        """Front bumper past the conflict-zone entry line."""
        return self.front >= self.route.zone_enter + margin

    def inside_zone(self) -> bool:
        return self.front >= self.route.zone_enter and self.rear <= self.route.zone_exit

    def cleared_zone(self) -> bool:
        return self.rear > self.route.zone_exit

    def gap_to_zone_entry(self) -> float:
        return self.route.zone_enter - self.front
