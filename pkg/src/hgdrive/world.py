"""Episode world: spawning, per-step advancement, collisions, reward."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import behavior
from .control import LaneContext, idm_acceleration, mobil_decision, mobil_safety
from .geometry import Approach, get_route, rectangles_overlap
from .vehicle import (
    DECEL_LIMIT,
    EGO_V_MAX,
    IDM_PRESETS,
    DriverStyle,
    EgoAction,
    MobilParams,
    SPEED_STEP,
    VehicleState,
    ego_idm,
)

DT = 0.1
MAX_EPISODE_STEPS = 300
LEADER_LATERAL_TOL = 2.0  # m off the route centerline to count as in-path
LEADER_HORIZON = 60.0  # m lookahead for car following
LANE_CHANGE_COOLDOWN_STEPS = 20
SPAWN_ATTEMPTS = 100
MIN_SPAWN_SPACING = 4.0  # bumper gap required between same-lane spawns

R_GOAL = 2.0
R_COLLISION = -2.0
R_VEL_COEF = 0.04


class EpisodeFinished(RuntimeError):
    pass


class SpawnError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n_aggressive: int = 2
    n_normal: int = 2
    n_conservative: int = 2
    ego_approach: Approach = Approach.SOUTH
    ego_spawn_s: float = 70.0
    hv_spawn_low: float = 10.0
    hv_spawn_high: float = 60.0
    max_steps: int = MAX_EPISODE_STEPS


@dataclass
class StepOutcome:
    next_states: list
    reward: float
    collided: bool
    goal_reached: bool
    timed_out: bool

    @property
    def done(self) -> bool:
        return self.collided or self.goal_reached or self.timed_out


def compute_reward(goal_reached: bool, collided: bool, v_ego: float, v_max: float = EGO_V_MAX) -> float:
    r_goal = R_GOAL if goal_reached else 0.0
    r_col = R_COLLISION if collided else 0.0
    r_vel = R_VEL_COEF * min(v_ego / v_max, 1.0)
    return r_goal + r_col + r_vel


class World:
    """All vehicles of one episode plus the stepping logic."""

    def __init__(self, vehicles: list, config: ScenarioConfig):
        self.vehicles = vehicles
        self.config = config
        self.dt = DT
        self.step_count = 0
        self.terminated = False
        self.mobil = MobilParams()
        self._last_lane_change = {v.id: -10**9 for v in vehicles}

    @property
    def ego(self) -> VehicleState:
        return self.vehicles[0]

    # ---- neighbourhood queries -------------------------------------------

    def _neighbours_on_route(self, veh: VehicleState, route, s: float):
        """(leader, follower) as (gap, speed) tuples projected onto route."""
        leader = follower = None
        for other in self.vehicles:
            if other.id == veh.id:
                continue
            s_p, dist = route.project(other.c_x, other.c_y)
            if dist > LEADER_LATERAL_TOL:
                continue
            ds = s_p - s
            share = (veh.length + other.length) / 2
            if 0.0 < ds <= LEADER_HORIZON:
                gap = ds - share
                if leader is None or gap < leader[0]:
                    leader = (gap, other.speed)
            elif -LEADER_HORIZON <= ds < 0.0:
                gap = -ds - share
                if follower is None or gap < follower[0]:
                    follower = (gap, other.speed)
        return leader, follower

    def leader_for(self, veh: VehicleState):
        leader, _ = self._neighbours_on_route(veh, veh.route, veh.s)
        return leader

    def lane_context(self, veh: VehicleState, route) -> LaneContext:
        leader, follower = self._neighbours_on_route(veh, route, veh.s)
        return LaneContext(
            v=veh.speed,
            leader_gap=leader[0] if leader else math.inf,
            leader_v=leader[1] if leader else 0.0,
            follower_gap=follower[0] if follower else math.inf,
            follower_v=follower[1] if follower else 0.0,
        )

    # ---- lane changes ----------------------------------------------------

    def _can_change_lane(self, veh: VehicleState) -> bool:
        return not veh.entered_zone() and self.step_count - self._last_lane_change[veh.id] >= LANE_CHANGE_COOLDOWN_STEPS

    def _execute_lane_change(self, veh: VehicleState, target_lane: int) -> None:
        veh.route = get_route(veh.route.approach, target_lane, veh.route.movement)
        veh.refresh_pose()
        self._last_lane_change[veh.id] = self.step_count

    def _ego_lane_change(self, direction: int) -> None:
        """direction -1 = toward inner lane (driver's left), +1 = outer."""
        ego = self.ego
        target_lane = ego.route.lane + direction
        if target_lane < 0 or target_lane > 1 or not self._can_change_lane(ego):
            return
        target_route = get_route(ego.route.approach, target_lane, ego.route.movement)
        ctx = self.lane_context(ego, target_route)
        if mobil_safety(ctx, self.mobil, IDM_PRESETS[DriverStyle.NORMAL]):
            self._execute_lane_change(ego, target_lane)

    def _hv_discretionary_lane_change(self, hv: VehicleState) -> None:
        if not self._can_change_lane(hv):
            return
        target_lane = 1 - hv.route.lane
        target_route = get_route(hv.route.approach, target_lane, hv.route.movement)
        params = IDM_PRESETS[hv.style]
        current = self.lane_context(hv, hv.route)
        target = self.lane_context(hv, target_route)
        if mobil_decision(current, target, self.mobil, params, hv.length):
            self._execute_lane_change(hv, target_lane)

    # ---- ego control -----------------------------------------------------

    def apply_ego_action(self, action: EgoAction) -> None:
        ego = self.ego
        if action == EgoAction.ACCELERATE:
            ego.target_speed = min(ego.target_speed + SPEED_STEP, EGO_V_MAX)
        elif action == EgoAction.SLOW_DOWN:
            ego.target_speed = max(ego.target_speed - SPEED_STEP, 0.0)
        elif action == EgoAction.LANE_LEFT:
            self._ego_lane_change(-1)
        elif action == EgoAction.LANE_RIGHT:
            self._ego_lane_change(+1)
        # Cruise holds the current target

    def _ego_accel(self) -> float:
        ego = self.ego
        if ego.target_speed < 0.05:
            return -DECEL_LIMIT if ego.speed > 0 else 0.0
        params = ego_idm(ego.target_speed)
        leader = self.leader_for(ego)
        if leader is None:
            cmd = idm_acceleration(ego.speed, 0.0, math.inf, params)
        else:
            gap, leader_speed = leader
            cmd = idm_acceleration(ego.speed, ego.speed - leader_speed, max(gap, behavior.MIN_GAP), params)
        return min(max(cmd, -DECEL_LIMIT), params.a_max)

    # ---- stepping --------------------------------------------------------

    def detect_collisions(self) -> list:
        pairs = []
        n = len(self.vehicles)
        for i in range(n):
            a = self.vehicles[i]
            for j in range(i + 1, n):
                b = self.vehicles[j]
                if abs(a.c_x - b.c_x) > 10 or abs(a.c_y - b.c_y) > 10:
                    continue
                if rectangles_overlap(
                    a.c_x, a.c_y, a.heading, a.length, a.width,
                    b.c_x, b.c_y, b.heading, b.length, b.width,
                ):
                    pairs.append((a.id, b.id))
        return pairs

    def step(self, ego_action: EgoAction) -> StepOutcome:
        if self.terminated:
            raise EpisodeFinished("episode finished")
        self.apply_ego_action(EgoAction(ego_action))
        for veh in self.vehicles[1:]:
            self._hv_discretionary_lane_change(veh)

        commands = {self.ego.id: self._ego_accel()}
        for veh in self.vehicles[1:]:
            commands[veh.id] = behavior.behavior_step(veh, self)

        for veh in self.vehicles:
            v_new = max(veh.speed + commands[veh.id] * self.dt, 0.0)
            realized = (v_new - veh.speed) / self.dt
            veh.speed = v_new
            veh.s += v_new * self.dt
            veh.accel = realized
            veh.accel_history.append(realized)
            veh.refresh_pose()

        self.step_count += 1
        collisions = self.detect_collisions()
        ego_collided = any(self.ego.id in pair for pair in collisions)
        goal = self.ego.cleared_zone() and not ego_collided
        timed_out = self.step_count >= self.config.max_steps and not (goal or ego_collided)
        reward = compute_reward(goal, ego_collided, self.ego.speed)
        self.terminated = ego_collided or goal or timed_out
        return StepOutcome(
            next_states=list(self.vehicles),
            reward=reward,
            collided=ego_collided,
            goal_reached=goal,
            timed_out=timed_out,
        )


def _spawn_once(rng: np.random.Generator, config: ScenarioConfig):
    styles = (
        [DriverStyle.AGGRESSIVE] * config.n_aggressive
        + [DriverStyle.NORMAL] * config.n_normal
        + [DriverStyle.CONSERVATIVE] * config.n_conservative
    )
    ego_lane = int(rng.integers(0, 2))
    ego = VehicleState(
        id=0,
        style=DriverStyle.EGO,
        route=get_route(config.ego_approach, ego_lane, "left"),
        s=config.ego_spawn_s,
    )
    vehicles = [ego]
    approaches = list(Approach)
    for idx, style in enumerate(styles, start=1):
        approach = approaches[int(rng.integers(0, 4))]
        lane = int(rng.integers(0, 2))
        s = float(rng.uniform(config.hv_spawn_low, config.hv_spawn_high))
        vehicles.append(VehicleState(id=idx, style=style, route=get_route(approach, lane, "straight"), s=s))

    for i, a in enumerate(vehicles):
        for b in vehicles[i + 1 :]:
            same_lane = a.route.approach == b.route.approach and a.route.lane == b.route.lane
            if same_lane and abs(a.s - b.s) < (a.length + b.length) / 2 + MIN_SPAWN_SPACING:
                return None
    return vehicles


def spawn_scenario(seed, config: ScenarioConfig = ScenarioConfig()) -> World:
    """Deterministic world from a seed; resamples overlapping placements."""
    rng = np.random.default_rng(seed)
    for _ in range(SPAWN_ATTEMPTS):
        vehicles = _spawn_once(rng, config)
        if vehicles is not None:
            return World(vehicles, config)
    raise SpawnError(f"no overlap-free placement after {SPAWN_ATTEMPTS} attempts")
