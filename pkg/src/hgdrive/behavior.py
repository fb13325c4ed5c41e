"""Style-dependent acceleration commands for human-driven vehicles.

Every HV follows IDM behind its route leader. The styles differ in how they
treat the conflict zone: aggressive drivers ignore cross traffic entirely,
normal drivers apply a first-entry-wins right-of-way rule, and conservative
drivers wait whenever anyone conflicting is near. Yielding is modelled as
IDM against a virtual stopped leader at the zone entry line and only applies
before the vehicle's front bumper crosses that line; once inside, a vehicle
is committed and clears the zone.
"""

from __future__ import annotations

import math

from .control import idm_acceleration
from .geometry import routes_conflict
from .vehicle import DECEL_LIMIT, DriverStyle, IDM_PRESETS, VehicleState

ARRIVAL_SPEED_FLOOR = 0.5  # m/s, keeps predicted arrival times finite
CAUTION_HORIZON = 6.0  # s, conservative drivers wait for anyone this close
MIN_GAP = 0.01


def arrival_time(veh: VehicleState, speed_floor: float = ARRIVAL_SPEED_FLOOR) -> float:
    """Predicted time until the front bumper reaches the conflict zone."""
    gap = veh.gap_to_zone_entry()
    if gap <= 0:
        return 0.0
    return gap / max(veh.speed, speed_floor)


def conflicting_vehicles(veh: VehicleState, world) -> list:
    """Vehicles whose routes cross veh's and that have not cleared the zone."""
    out = []
    for other in world.vehicles:
        if other.id == veh.id or other.cleared_zone():
            continue
        if routes_conflict(veh.route, other.route):
            out.append(other)
    return out


def must_yield(hv: VehicleState, world) -> bool:
    if hv.style is DriverStyle.AGGRESSIVE:
        return False
    if hv.entered_zone():
        return False  # committed
    rivals = conflicting_vehicles(hv, world)
    if hv.style is DriverStyle.CONSERVATIVE:
        return any(o.entered_zone() or arrival_time(o) <= CAUTION_HORIZON for o in rivals)
    # normal: first entry wins, ties broken by lower id
    mine = (arrival_time(hv), hv.id)
    return any((arrival_time(o), o.id) < mine for o in rivals)


def yield_command(hv: VehicleState, params) -> float:
    """IDM braking against a virtual stopped leader at the zone entry line."""
    gap = max(hv.gap_to_zone_entry(), MIN_GAP)
    return idm_acceleration(hv.speed, hv.speed, gap, params)


def behavior_step(hv: VehicleState, world) -> float:
    """Longitudinal acceleration command for one HV this step."""
    params = IDM_PRESETS[hv.style]
    leader = world.leader_for(hv)
    if leader is None:
        command = idm_acceleration(hv.speed, 0.0, math.inf, params)
    else:
        gap, leader_speed = leader
        command = idm_acceleration(hv.speed, hv.speed - leader_speed, max(gap, MIN_GAP), params)
    if must_yield(hv, world):
        command = min(command, yield_command(hv, params))
    return min(max(command, -DECEL_LIMIT), params.a_max)
