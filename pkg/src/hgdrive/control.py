"""Car-following (IDM) and lane-change (MOBIL) controllers.

Both operate on route-relative scalars: speeds along the route and bumper
gaps. Absent neighbours are expressed as infinite gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .vehicle import DECEL_LIMIT, IdmParams, MobilParams


class LeaderGapError(ValueError):
    """Raised when a follower is asked to react to a non-positive gap."""


def idm_acceleration(v: float, dv: float, s: float, p: IdmParams) -> float:
    """Commanded acceleration for speed v, closing speed dv, bumper gap s.

    dv is ego speed minus leader speed (positive when closing). s = inf means
    a free road. The desired-gap term is floored at zero so an opening gap
    can never turn the interaction term into a bonus; output is clamped to
    [-DECEL_LIMIT, a_max].
    """
    if s <= 0:
        raise LeaderGapError(f"non-positive leader gap {s!r}")
    free = (v / p.v_star) ** p.delta
    if math.isinf(s):
        interaction = 0.0
    else:
        s_star = p.s_0 + v * p.T_gap + v * dv / (2 * math.sqrt(p.a_max * p.b_comf))
        s_star = max(s_star, 0.0)
        interaction = (s_star / s) ** 2
    a = p.a_max * (1.0 - free - interaction)
    return min(max(a, -DECEL_LIMIT), p.a_max)


@dataclass(frozen=True)
class LaneContext:
    """Neighbourhood of one lane as seen from a (possibly hypothetical) slot.

    Gaps are bumper-to-bumper and relative to the slot the deciding vehicle
    occupies (or would occupy); inf marks an absent neighbour.
    """

    v: float  # deciding vehicle's speed
    leader_gap: float = math.inf
    leader_v: float = 0.0
    follower_gap: float = math.inf
    follower_v: float = 0.0


def _accel_or_none(v: float, dv: float, s: float, p: IdmParams):
    if math.isinf(s):
        return idm_acceleration(v, dv, math.inf, p)
    if s <= 0:
        return None
    return idm_acceleration(v, dv, s, p)


def mobil_safety(target: LaneContext, params: MobilParams, idm: IdmParams) -> bool:
    """Would the target-lane follower keep its braking above -b_safe?"""
    if target.leader_gap <= 0 or target.follower_gap <= 0:
        return False
    if math.isinf(target.follower_gap):
        return True
    a_new = _accel_or_none(target.follower_v, target.follower_v - target.v, target.follower_gap, idm)
    return a_new is not None and a_new >= -params.b_safe


def mobil_decision(
    current: LaneContext,
    target: LaneContext,
    params: MobilParams,
    idm: IdmParams,
    vehicle_length: float = 5.0,
) -> bool:
    """Safety criterion plus politeness-weighted incentive criterion."""
    if not mobil_safety(target, params, idm):
        return False

    a_cur = _accel_or_none(current.v, current.v - current.leader_v, current.leader_gap, idm)
    a_tgt = _accel_or_none(current.v, current.v - target.leader_v, target.leader_gap, idm)
    if a_cur is None or a_tgt is None:
        return False
    gain_self = a_tgt - a_cur

    # new follower: before the change it trails the target-lane leader
    loss_new = 0.0
    if not math.isinf(target.follower_gap):
        before_gap = target.follower_gap + vehicle_length + target.leader_gap
        a_before = _accel_or_none(target.follower_v, target.follower_v - target.leader_v, before_gap, idm)
        a_after = _accel_or_none(target.follower_v, target.follower_v - current.v, target.follower_gap, idm)
        if a_before is None or a_after is None:
            return False
        loss_new = a_after - a_before

    # old follower: gains the departing vehicle's slot
    gain_old = 0.0
    if not math.isinf(current.follower_gap):
        after_gap = current.follower_gap + vehicle_length + current.leader_gap
        a_before = _accel_or_none(current.follower_v, current.follower_v - current.v, current.follower_gap, idm)
        a_after = _accel_or_none(current.follower_v, current.follower_v - current.leader_v, after_gap, idm)
        if a_before is None or a_after is None:
            return False
        gain_old = a_after - a_before

    incentive = gain_self + params.politeness * (loss_new + gain_old)
    return incentive > params.accel_threshold
