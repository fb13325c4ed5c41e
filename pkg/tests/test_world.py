import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgdrive.geometry import Approach, get_route
from hgdrive.vehicle import EGO_V_MAX, DriverStyle, EgoAction, VehicleState
from hgdrive.world import (
    MAX_EPISODE_STEPS,
    EpisodeFinished,
    ScenarioConfig,
    SpawnError,
    World,
    compute_reward,
    spawn_scenario,
)


def lone_ego_world(lane=0, s=70.0, **cfg) -> World:
    config = ScenarioConfig(**cfg)
    ego = VehicleState(id=0, style=DriverStyle.EGO, route=get_route(Approach.SOUTH, lane, "left"), s=s)
    return World([ego], config)


# ---- reward ---------------------------------------------------------------


def test_reward_static_world():
    assert compute_reward(False, False, 0.0) == 0.0


def test_reward_goal_with_speed_bonus():
    assert compute_reward(True, False, 10.0) == pytest.approx(2.0 + 0.04 * 0.5)


def test_reward_collision():
    assert compute_reward(False, True, 0.0) == pytest.approx(-2.0)


def test_reward_speed_bonus_saturates():
    assert compute_reward(False, False, 40.0) == pytest.approx(0.04)


@settings(max_examples=200, deadline=None)
@given(st.booleans(), st.booleans(), st.floats(min_value=0, max_value=50))
def test_reward_bounds(goal, collided, v):
    r = compute_reward(goal, collided, v)
    assert -2.0 <= r <= 2.04


# ---- ego action mapping ----------------------------------------------------


def test_accelerate_raises_target_by_two():
    w = lone_ego_world()
    w.ego.target_speed = 10.0
    w.apply_ego_action(EgoAction.ACCELERATE)
    assert w.ego.target_speed == 12.0


def test_accelerate_clamps_at_vmax():
    w = lone_ego_world()
    w.ego.target_speed = EGO_V_MAX
    w.apply_ego_action(EgoAction.ACCELERATE)
    assert w.ego.target_speed == EGO_V_MAX


def test_slowdown_clamps_at_zero():
    w = lone_ego_world()
    w.ego.target_speed = 1.0
    w.apply_ego_action(EgoAction.SLOW_DOWN)
    assert w.ego.target_speed == 0.0


def test_cruise_holds_target():
    w = lone_ego_world()
    w.ego.target_speed = 8.0
    w.apply_ego_action(EgoAction.CRUISE)
    assert w.ego.target_speed == 8.0


def test_lane_left_changes_to_inner_lane():
    w = lone_ego_world(lane=1)
    w.apply_ego_action(EgoAction.LANE_LEFT)
    assert w.ego.route.lane == 0


def test_lane_left_on_inner_lane_is_noop():
    w = lone_ego_world(lane=0)
    w.apply_ego_action(EgoAction.LANE_LEFT)
    assert w.ego.route.lane == 0


def test_lane_left_with_unsafe_follower_is_veto():
    config = ScenarioConfig()
    ego = VehicleState(id=0, style=DriverStyle.EGO, route=get_route(Approach.SOUTH, 1, "left"), s=70.0)
    # fast follower right behind the target slot on the inner lane
    chaser = VehicleState(
        id=1, style=DriverStyle.AGGRESSIVE, route=get_route(Approach.SOUTH, 0, "straight"), s=63.0, speed=18.0
    )
    w = World([ego, chaser], config)
    w.apply_ego_action(EgoAction.LANE_LEFT)
    assert w.ego.route.lane == 1


def test_lane_change_cooldown():
    w = lone_ego_world(lane=1)
    w.apply_ego_action(EgoAction.LANE_LEFT)
    assert w.ego.route.lane == 0
    w.apply_ego_action(EgoAction.LANE_RIGHT)  # within cooldown: ignored
    assert w.ego.route.lane == 0


# ---- stepping --------------------------------------------------------------


def test_semi_implicit_euler_single_step():
    w = lone_ego_world()
    w.ego.target_speed = 12.0
    y0 = w.ego.c_y
    w.step(EgoAction.CRUISE)
    # free road from standstill: a = a_max = 3.5 (normal-style constants)
    assert w.ego.speed == pytest.approx(0.35)
    assert w.ego.accel == pytest.approx(3.5)
    assert w.ego.c_y - y0 == pytest.approx(0.35 * 0.1)
    assert w.ego.accel_history[-1] == pytest.approx(3.5)


def test_static_world_cruise_reward_zero():
    w = lone_ego_world()
    out = w.step(EgoAction.CRUISE)
    assert w.ego.speed == 0.0
    assert out.reward == 0.0
    assert not out.done


def test_lone_ego_reaches_goal():
    w = lone_ego_world()
    for step in range(MAX_EPISODE_STEPS):
        out = w.step(EgoAction.ACCELERATE)
        if out.done:
            break
    assert out.goal_reached
    assert not out.collided
    assert out.reward >= 2.0


def test_step_after_done_raises():
    w = lone_ego_world(max_steps=2)
    w.step(EgoAction.CRUISE)
    out = w.step(EgoAction.CRUISE)
    assert out.timed_out
    with pytest.raises(EpisodeFinished):
        w.step(EgoAction.CRUISE)


def test_timeout_flag_only_at_cap():
    w = lone_ego_world(max_steps=5)
    outs = [w.step(EgoAction.CRUISE) for _ in range(5)]
    assert all(not o.timed_out for o in outs[:-1])
    assert outs[-1].timed_out and outs[-1].done


def test_collision_detection_reports_overlap():
    config = ScenarioConfig()
    ego = VehicleState(id=0, style=DriverStyle.EGO, route=get_route(Approach.SOUTH, 0, "left"), s=70.0)
    hv = VehicleState(id=1, style=DriverStyle.NORMAL, route=get_route(Approach.SOUTH, 0, "straight"), s=74.0)
    w = World([ego, hv], config)
    assert (0, 1) in w.detect_collisions()


def test_collision_terminates_with_penalty():
    config = ScenarioConfig()
    ego = VehicleState(id=0, style=DriverStyle.EGO, route=get_route(Approach.SOUTH, 0, "left"), s=70.0, speed=20.0)
    ego.target_speed = 20.0
    wall = VehicleState(id=1, style=DriverStyle.NORMAL, route=get_route(Approach.SOUTH, 0, "straight"), s=76.5)
    w = World([ego, wall], config)
    out = w.step(EgoAction.CRUISE)
    assert out.collided and out.done
    assert out.reward <= -2.0 + 0.04


# ---- spawning ---------------------------------------------------------------


def test_spawn_counts_and_styles():
    w = spawn_scenario(7)
    styles = [v.style for v in w.vehicles]
    assert len(w.vehicles) == 7
    assert styles[0] == DriverStyle.EGO
    assert styles.count(DriverStyle.AGGRESSIVE) == 2
    assert styles.count(DriverStyle.NORMAL) == 2
    assert styles.count(DriverStyle.CONSERVATIVE) == 2


def test_spawn_all_speeds_zero():
    w = spawn_scenario(3)
    assert all(v.speed == 0.0 for v in w.vehicles)


def test_spawn_routes():
    w = spawn_scenario(11)
    assert w.ego.route.movement == "left"
    assert w.ego.route.approach == Approach.SOUTH
    assert all(v.route.movement == "straight" for v in w.vehicles[1:])


def test_spawn_deterministic():
    a = spawn_scenario(123)
    b = spawn_scenario(123)
    assert [(v.id, v.s, v.route.approach, v.route.lane) for v in a.vehicles] == [
        (v.id, v.s, v.route.approach, v.route.lane) for v in b.vehicles
    ]


def test_spawn_seed_changes_world():
    a = spawn_scenario(1)
    b = spawn_scenario(2)
    assert [(v.s, v.route.approach.value) for v in a.vehicles] != [
        (v.s, v.route.approach.value) for v in b.vehicles
    ]


def test_spawn_respects_same_lane_spacing():
    for seed in range(20):
        w = spawn_scenario(seed)
        for i, a in enumerate(w.vehicles):
            for b in w.vehicles[i + 1 :]:
                if a.route.approach == b.route.approach and a.route.lane == b.route.lane:
                    assert abs(a.s - b.s) >= (a.length + b.length) / 2 + 4.0


def test_spawn_error_when_infeasible():
    config = ScenarioConfig(n_aggressive=30, n_normal=30, n_conservative=30, hv_spawn_low=10.0, hv_spawn_high=12.0)
    with pytest.raises(SpawnError):
        spawn_scenario(0, config)


def test_no_initial_collisions():
    for seed in range(20):
        w = spawn_scenario(seed)
        assert w.detect_collisions() == []


# ---- determinism -------------------------------------------------------------


def test_bitwise_deterministic_trajectories():
    def run(seed):
        w = spawn_scenario(seed)
        trace = []
        for i in range(80):
            out = w.step(EgoAction.ACCELERATE if i % 3 else EgoAction.CRUISE)
            trace.append(tuple((v.c_x, v.c_y, v.speed) for v in w.vehicles))
            trace.append(out.reward)
            if out.done:
                break
        return trace

    assert run(99) == run(99)
